//! The six classifiers, behind one fit/predict contract.
//!
//! Every model is fitted from a feature matrix and 0-based class indices, and
//! predicts class indices. Ties always resolve to the lowest class index.
//! Fitting is deterministic given the `ClassifierSpec`, including its seed.

mod cart;
mod knn;
mod lda;
mod lr;
mod nb;
mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use cart::{CartParams, DecisionTree, TreeNode};
pub use knn::{KnnParams, NearestNeighbors};
pub use lda::{LdaParams, LinearDiscriminant};
pub use lr::{LogisticRegression, LrParams};
pub use nb::{GaussianNb, NbParams};
pub use svm::{
    rbf_kernel, solve_binary, BinaryProblem, BinarySolution, SupportVectorMachine, SvmParams,
};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lr,
    Lda,
    Knn,
    Cart,
    Nb,
    Svm,
}

impl ClassifierKind {
    /// Table column order.
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Lr,
        ClassifierKind::Lda,
        ClassifierKind::Knn,
        ClassifierKind::Cart,
        ClassifierKind::Nb,
        ClassifierKind::Svm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Lr => "LR",
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Cart => "CART",
            ClassifierKind::Nb => "NB",
            ClassifierKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown classifier `{s}`")))
    }
}

/// Hyperparameters for all six kinds. Each model reads its own section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lr: LrParams,
    pub lda: LdaParams,
    pub knn: KnnParams,
    pub cart: CartParams,
    pub nb: NbParams,
    pub svm: SvmParams,
}

impl Hyperparameters {
    pub fn check(&self) -> Result<()> {
        self.lr.check()?;
        self.lda.check()?;
        self.knn.check()?;
        self.cart.check()?;
        self.nb.check()?;
        self.svm.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            hyperparameters: Hyperparameters::default(),
            seed: 0,
        }
    }
}

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierModel {
    Lr(LogisticRegression),
    Lda(LinearDiscriminant),
    Knn(NearestNeighbors),
    Cart(DecisionTree),
    Nb(GaussianNb),
    Svm(SupportVectorMachine),
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Lr(_) => ClassifierKind::Lr,
            ClassifierModel::Lda(_) => ClassifierKind::Lda,
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
            ClassifierModel::Cart(_) => ClassifierKind::Cart,
            ClassifierModel::Nb(_) => ClassifierKind::Nb,
            ClassifierModel::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::Lr(m) => m.n_features(),
            ClassifierModel::Lda(m) => m.n_features(),
            ClassifierModel::Knn(m) => m.n_features(),
            ClassifierModel::Cart(m) => m.n_features,
            ClassifierModel::Nb(m) => m.n_features(),
            ClassifierModel::Svm(m) => m.n_features(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            ClassifierModel::Lr(m) => m.class_count(),
            ClassifierModel::Lda(m) => m.class_count,
            ClassifierModel::Knn(m) => m.class_count,
            ClassifierModel::Cart(m) => m.class_count,
            ClassifierModel::Nb(m) => m.class_count,
            ClassifierModel::Svm(m) => m.class_count,
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        check_input(x, Some(self.n_features()))?;
        Ok(match self {
            ClassifierModel::Lr(m) => m.predict(x),
            ClassifierModel::Lda(m) => m.predict(x),
            ClassifierModel::Knn(m) => m.predict(x),
            ClassifierModel::Cart(m) => m.predict(x),
            ClassifierModel::Nb(m) => m.predict(x),
            ClassifierModel::Svm(m) => m.predict(x),
        })
    }
}

/// Fits the classifier described by `spec`. `class_count` is the size of the
/// label dictionary; classes absent from `y` are simply never predicted by
/// the models that cannot represent them.
pub fn fit(
    spec: &ClassifierSpec,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    class_count: usize,
) -> Result<ClassifierModel> {
    check_training(x, y, class_count)?;
    let h = &spec.hyperparameters;
    Ok(match spec.kind {
        ClassifierKind::Lr => ClassifierModel::Lr(LogisticRegression::fit(&h.lr, x, y, class_count)?),
        ClassifierKind::Lda => {
            ClassifierModel::Lda(LinearDiscriminant::fit(&h.lda, x, y, class_count)?)
        }
        ClassifierKind::Knn => {
            ClassifierModel::Knn(NearestNeighbors::fit(&h.knn, x, y, class_count)?)
        }
        ClassifierKind::Cart => ClassifierModel::Cart(DecisionTree::fit(&h.cart, x, y, class_count)?),
        ClassifierKind::Nb => ClassifierModel::Nb(GaussianNb::fit(&h.nb, x, y, class_count)?),
        ClassifierKind::Svm => ClassifierModel::Svm(SupportVectorMachine::fit(
            &h.svm, x, y, class_count, spec.seed,
        )?),
    })
}

pub fn fit_dataset(spec: &ClassifierSpec, train: &Dataset) -> Result<ClassifierModel> {
    fit(spec, train.features.view(), &train.labels, train.class_count())
}

fn check_input(x: ArrayView2<'_, f64>, n_features: Option<usize>) -> Result<()> {
    if let Some(d) = n_features {
        if x.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.ncols(),
            });
        }
    }
    for (i, row) in x.rows().into_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
    }
    Ok(())
}

fn check_training(x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch(x.nrows(), y.len()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= class_count) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} out of range for {class_count} classes"
        )));
    }
    check_input(x, None)?;
    let first = y.first().copied();
    if first.is_none() || y.iter().all(|&c| Some(c) == first) {
        return Err(Error::SingleClassTraining);
    }
    Ok(())
}

/// Index of the largest score; ties go to the lowest index.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

pub(crate) fn class_counts(y: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0; class_count];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_class_training_is_rejected() {
        let x = array![[0.0], [1.0]];
        for kind in ClassifierKind::ALL {
            let err = fit(&ClassifierSpec::new(kind), x.view(), &[1, 1], 2).unwrap_err();
            assert!(matches!(err, Error::SingleClassTraining), "{kind}");
        }
    }

    #[test]
    fn bad_inputs() {
        let x = array![[0.0], [f64::NAN]];
        let err = fit(&ClassifierSpec::new(ClassifierKind::Knn), x.view(), &[0, 1], 2).unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput(1)));

        let x = array![[0.0], [1.0]];
        let model = fit(&ClassifierSpec::new(ClassifierKind::Lda), x.view(), &[0, 1], 2).unwrap();
        let err = model.predict(array![[0.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, got: 2 }));
        let err = model.predict(array![[f64::INFINITY]].view()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput(0)));
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.label().parse::<ClassifierKind>().unwrap(), kind);
        }
        assert!("xgb".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax([1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax([f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
    }
}
