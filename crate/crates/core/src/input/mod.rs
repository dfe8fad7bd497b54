//! Parameter value generation guided by per-parameter bandit agents.

mod bandit;
mod dictionary;
mod generate;
pub mod llm;

pub use bandit::{probability_match, AgentKey, Decision, DecisionKind, ExperienceStore};
pub use dictionary::{ValueDictionaries, DICTIONARY_CAPACITY};
pub use generate::{
    random_value, ArrayLengthClass, GeneratedRequest, GeneratedValue, InputGenerator, ValueSource,
    ARRAY_CLASS_C_MAX, DEFAULT_EPSILON, RANDOM_NUMBER_MAX, RANDOM_STRING_MAX,
};
pub(crate) use generate::random_string;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("value source {value_source} cannot produce a value for {parameter}")]
    SourceNotApplicable { value_source: ValueSource, parameter: String },
    #[error("array constraints of {parameter} admit no length class")]
    NoFeasibleClass { parameter: String },
    #[error("dictionary: {0}")]
    LlmDictionary(String),
}
