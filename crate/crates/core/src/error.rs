use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid feedback polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("degree {degree} exceeds the exhaustive period-check bound {bound}")]
    DegreeAboveBound { degree: u32, bound: u32 },

    #[error("invalid truth table: {0}")]
    InvalidTruthTable(String),

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error("key has {got} bits, instance expects {expected}")]
    WrongKeyLength { expected: usize, got: usize },

    #[error("register R{register} would start from an all-zero fill")]
    DegenerateKey { register: usize },

    #[error("malformed key: {0}")]
    MalformedKey(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("p' = 0.5 carries no correlation")]
    UnbiasedModel,

    #[error("no mask sequence covers registers {uncovered:?}")]
    Unattackable { uncovered: Vec<usize> },

    #[error("stage needs 2^{exponent} joint states, budget is 2^{budget}; scale the instance down or raise the budget")]
    StageTooLarge { exponent: u32, budget: u32 },

    #[error("stage needs the fill of R{register}, which has not been recovered")]
    MissingKnownRegister { register: usize },

    #[error("no candidate passed validation")]
    EmptyBeam,

    #[error("FIPS 140-2 battery needs exactly {expected} bits, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, printed by the CLI on the diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidPolynomial(_) => "InvalidPolynomial",
            Error::DegreeAboveBound { .. } => "DegreeAboveBound",
            Error::InvalidTruthTable(_) => "InvalidTruthTable",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::WrongKeyLength { .. } => "WrongKeyLength",
            Error::DegenerateKey { .. } => "DegenerateKey",
            Error::MalformedKey(_) => "MalformedKey",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::UnbiasedModel => "UnbiasedModel",
            Error::Unattackable { .. } => "Unattackable",
            Error::StageTooLarge { .. } => "StageTooLarge",
            Error::MissingKnownRegister { .. } => "MissingKnownRegister",
            Error::EmptyBeam => "EmptyBeam",
            Error::WrongLength { .. } => "WrongLength",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
