use thiserror::Error;

use crate::domain::Menu;

pub type Result<T> = std::result::Result<T, RamError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RamError {
    #[error("grand set size {0} outside supported range 2..=16")]
    GrandSetSize(usize),
    #[error("duplicate alternative label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown alternative label `{0}`")]
    UnknownLabel(String),
    #[error("menu {0} is empty or a singleton")]
    TrivialMenu(Menu),
    #[error("menu {0} listed twice")]
    DuplicateMenu(Menu),
    #[error("menu {0} is not a subset of the grand set")]
    MenuOutsideGrandSet(Menu),
    #[error("menu {0} is not part of the index")]
    MenuNotIndexed(Menu),
    #[error("limited-mode menu list is empty")]
    EmptyMenuList,
    #[error("vector length {got} does not match layout length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid preference: {0}")]
    InvalidPreference(String),
    #[error("choice {choice} is not in menu {menu}")]
    ChoiceNotInMenu { menu: Menu, choice: usize },
    #[error("invalid attention model parameters: {0}")]
    InvalidModel(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("phi = {0} outside [1/2, 1]")]
    PhiOutOfRange(f64),
    #[error("operation requires a {expected}-mode menu index")]
    WrongMode { expected: &'static str },
    #[error("grand set size {k} exceeds the limit {limit} for this operation")]
    TooManyAlternatives { k: usize, limit: usize },
    #[error("attention rule is not triangular: {0}")]
    NotTriangular(String),
    #[error("attention rule is not monotonic: {0}")]
    NotMonotonic(String),
    #[error("internal defect: {0}")]
    Defect(String),
    #[error("matrix cannot be permuted: {0}")]
    NotPermutable(&'static str),
    #[error("menu {0} has no observations; switch to limited mode or supply data")]
    MissingMenu(Menu),
    #[error("numerical defect: {0}")]
    Numerical(String),
    #[error("invalid inference options: {0}")]
    InvalidOptions(String),
    #[error("empty preference collection")]
    EmptyCollection,
    #[error("moment {row} has zero standard deviation and positive numerator with sigma_floor = 0")]
    DegenerateMoment { row: usize },
}
