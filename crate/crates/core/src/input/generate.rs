use super::bandit::{probability_match, AgentKey, Decision, DecisionKind, ExperienceStore};
use super::dictionary::ValueDictionaries;
use super::InputError;
use crate::oas::{Arguments, OperationSpec, ParameterSpec, Schema, SchemaKind};
use rand::distributions::Alphanumeric;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt;

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const RANDOM_STRING_MAX: u64 = 10;
pub const RANDOM_NUMBER_MAX: f64 = 100.0;
pub const ARRAY_CLASS_C_MAX: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueSource {
    Random,
    Default,
    Enum,
    Examples,
    ResponseDictionary,
    LastResponseDictionary,
    RequestDictionary,
    LastRequestDictionary,
    LargeLanguageModelDictionary,
}

impl ValueSource {
    pub const ALL: [ValueSource; 9] = [
        Self::Random,
        Self::Default,
        Self::Enum,
        Self::Examples,
        Self::ResponseDictionary,
        Self::LastResponseDictionary,
        Self::RequestDictionary,
        Self::LastRequestDictionary,
        Self::LargeLanguageModelDictionary,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Random => "Random",
            Self::Default => "Default",
            Self::Enum => "Enum",
            Self::Examples => "Examples",
            Self::ResponseDictionary => "ResponseDictionary",
            Self::LastResponseDictionary => "LastResponseDictionary",
            Self::RequestDictionary => "RequestDictionary",
            Self::LastRequestDictionary => "LastRequestDictionary",
            Self::LargeLanguageModelDictionary => "LargeLanguageModelDictionary",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }
}

impl fmt::Display for ValueSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArrayLengthClass {
    /// empty
    A,
    /// one element
    B,
    /// two or more
    C,
}

impl ArrayLengthClass {
    pub const ALL: [ArrayLengthClass; 3] = [Self::A, Self::B, Self::C];

    pub fn label(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        }
    }

    fn feasible(self, schema: &Schema) -> bool {
        let lo = schema.min_items.unwrap_or(0);
        let hi = schema.max_items.unwrap_or(u64::MAX);
        let (a, b) = match self {
            Self::A => (0, 0),
            Self::B => (1, 1),
            Self::C => (2, u64::MAX),
        };
        a.max(lo) <= b.min(hi)
    }
}

const INCLUDE: &str = "include";
const EXCLUDE: &str = "exclude";

/// Type-directed random value satisfying every constraint of `schema`.
/// Used wherever no bandit decision is involved, e.g. by mutators.
pub fn random_value<R: Rng + ?Sized>(schema: &Schema, rng: &mut R) -> Value {
    if let Some(values) = &schema.enum_values {
        return values[rng.gen_range(0..values.len())].clone();
    }
    match schema.kind {
        SchemaKind::Array => {
            let lo = schema.min_items.unwrap_or(0);
            let cap = lo.max(ARRAY_CLASS_C_MAX);
            let hi = schema.max_items.unwrap_or(cap).min(cap).max(lo);
            let len = rng.gen_range(lo..=hi);
            let items = schema.items.as_deref().cloned().unwrap_or_else(Schema::string);
            Value::Array((0..len).map(|_| random_value(&items, rng)).collect())
        }
        SchemaKind::Object => {
            let mut map = Map::new();
            for (name, prop) in &schema.properties {
                if prop.required || rng.gen_bool(0.5) {
                    map.insert(name.clone(), random_value(&prop.schema, rng));
                }
            }
            Value::Object(map)
        }
        _ => random_scalar(schema, rng),
    }
}

/// Inclusive integer range used for random draws.
pub(crate) fn integer_range(schema: &Schema) -> (i64, i64) {
    let (lo, hi) = number_range(schema);
    let lo_i = lo.ceil() as i64;
    let hi_i = hi.floor() as i64;
    (lo_i, hi_i.max(lo_i))
}

pub(crate) fn number_range(schema: &Schema) -> (f64, f64) {
    match (schema.minimum, schema.maximum) {
        (Some(lo), Some(hi)) => (lo, hi),
        (Some(lo), None) => (lo, if lo > RANDOM_NUMBER_MAX { lo + RANDOM_NUMBER_MAX } else { RANDOM_NUMBER_MAX }),
        (None, Some(hi)) => (if hi < 0.0 { hi - RANDOM_NUMBER_MAX } else { 0.0 }, hi),
        (None, None) => (0.0, RANDOM_NUMBER_MAX),
    }
}

pub(crate) fn string_length_range(schema: &Schema) -> (u64, u64) {
    if schema.max_length == Some(0) {
        return (0, 0);
    }
    let lo = schema.min_length.unwrap_or(0).max(1);
    let cap = lo.max(RANDOM_STRING_MAX);
    let hi = schema.max_length.unwrap_or(cap).min(cap).max(lo);
    (lo, hi)
}

pub(crate) fn random_string<R: Rng + ?Sized>(len: u64, rng: &mut R) -> String {
    (0..len).map(|_| rng.sample(Alphanumeric) as char).collect()
}

fn random_scalar<R: Rng + ?Sized>(schema: &Schema, rng: &mut R) -> Value {
    match schema.kind {
        SchemaKind::String => {
            let (lo, hi) = string_length_range(schema);
            Value::String(random_string(rng.gen_range(lo..=hi), rng))
        }
        SchemaKind::Integer => {
            let (lo, hi) = integer_range(schema);
            Value::from(rng.gen_range(lo..=hi))
        }
        SchemaKind::Number => {
            let (lo, hi) = number_range(schema);
            let x = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let rounded = ((x * 1000.0).round() / 1000.0).clamp(lo, hi);
            serde_json::Number::from_f64(rounded)
                .map(Value::Number)
                .unwrap_or(Value::from(0))
        }
        SchemaKind::Boolean => Value::Bool(rng.gen_bool(0.5)),
        SchemaKind::Array | SchemaKind::Object => random_value(schema, rng),
    }
}

/// Whether a dictionary value can stand in for a value of `kind`: scalars
/// for scalar schemas, arrays and objects only for their own kind.
fn shape_matches(kind: SchemaKind, value: &Value) -> bool {
    match kind {
        SchemaKind::Array => value.is_array(),
        SchemaKind::Object => value.is_object(),
        _ => !(value.is_array() || value.is_object() || value.is_null()),
    }
}

/// Result of generating the arguments for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRequest {
    pub arguments: Arguments,
    /// Source used for each top-level parameter present in `arguments`.
    pub provenance: BTreeMap<usize, ValueSource>,
    /// Every bandit decision made along the way, for later reward.
    pub trace: Vec<Decision>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedValue {
    pub value: Value,
    pub source: ValueSource,
}

/// Bandit-driven input generation for all parameters of an operation.
#[derive(Debug, Clone)]
pub struct InputGenerator {
    pub epsilon: f64,
    pub store: ExperienceStore,
    pub dictionaries: ValueDictionaries,
}

impl Default for InputGenerator {
    fn default() -> Self {
        Self::new(DEFAULT_EPSILON)
    }
}

impl InputGenerator {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            store: ExperienceStore::new(),
            dictionaries: ValueDictionaries::default(),
        }
    }

    fn candidates(&self, key: &AgentKey, options: &[&str]) -> Vec<(String, u64)> {
        options
            .iter()
            .map(|o| (o.to_string(), self.store.tally(key, o)))
            .collect()
    }

    /// Include/exclude decision for an optional parameter or property.
    pub fn decide_presence<R: Rng + ?Sized>(&self, name: &str, rng: &mut R, trace: &mut Vec<Decision>) -> bool {
        let agent = AgentKey::new(name, DecisionKind::Presence);
        let options = self.candidates(&agent, &[INCLUDE, EXCLUDE]);
        let choice = probability_match(&options, self.epsilon, rng).clone();
        let include = choice == INCLUDE;
        trace.push(Decision { agent, option: choice });
        include
    }

    /// Picks a length class among those the schema allows, then a concrete
    /// length within it.
    pub fn decide_array_length<R: Rng + ?Sized>(
        &self,
        name: &str,
        schema: &Schema,
        rng: &mut R,
        trace: &mut Vec<Decision>,
    ) -> Result<usize, InputError> {
        let agent = AgentKey::new(name, DecisionKind::ArrayLength);
        let feasible: Vec<&str> = ArrayLengthClass::ALL
            .into_iter()
            .filter(|c| c.feasible(schema))
            .map(ArrayLengthClass::label)
            .collect();
        if feasible.is_empty() {
            return Err(InputError::NoFeasibleClass {
                parameter: name.to_string(),
            });
        }
        let options = self.candidates(&agent, &feasible);
        let choice = probability_match(&options, self.epsilon, rng).clone();
        let len = match choice.as_str() {
            "A" => 0,
            "B" => 1,
            _ => {
                let lo = schema.min_items.unwrap_or(0).max(2);
                let hi = schema
                    .max_items
                    .unwrap_or(ARRAY_CLASS_C_MAX)
                    .min(ARRAY_CLASS_C_MAX)
                    .max(lo);
                rng.gen_range(lo..=hi) as usize
            }
        };
        trace.push(Decision { agent, option: choice });
        Ok(len)
    }

    /// Sources that can currently produce a value for `name` under `schema`.
    pub fn applicable_sources(&self, name: &str, schema: &Schema) -> Vec<ValueSource> {
        ValueSource::ALL
            .into_iter()
            .filter(|s| self.is_applicable(*s, name, schema))
            .collect()
    }

    fn is_applicable(&self, source: ValueSource, name: &str, schema: &Schema) -> bool {
        let ok = |v: &Value| shape_matches(schema.kind, v);
        let d = &self.dictionaries;
        match source {
            ValueSource::Random => true,
            ValueSource::Default => schema.default_value.is_some(),
            ValueSource::Enum => schema.enum_values.as_ref().is_some_and(|e| !e.is_empty()),
            ValueSource::Examples => !schema.example_values.is_empty(),
            ValueSource::ResponseDictionary => d.response(name).is_some_and(|l| l.iter().any(ok)),
            ValueSource::LastResponseDictionary => d.last_response(name).is_some_and(ok),
            ValueSource::RequestDictionary => d.request(name).is_some_and(|l| l.iter().any(ok)),
            ValueSource::LastRequestDictionary => d.last_request(name).is_some_and(ok),
            ValueSource::LargeLanguageModelDictionary => d.llm(name).is_some_and(|l| l.iter().any(ok)),
        }
    }

    pub fn select_value_source<R: Rng + ?Sized>(
        &self,
        name: &str,
        schema: &Schema,
        rng: &mut R,
        trace: &mut Vec<Decision>,
    ) -> ValueSource {
        let agent = AgentKey::new(name, DecisionKind::Source);
        let options: Vec<(ValueSource, u64)> = self
            .applicable_sources(name, schema)
            .into_iter()
            .map(|s| (s, self.store.tally(&agent, s.label())))
            .collect();
        let source = *probability_match(&options, self.epsilon, rng);
        trace.push(Decision {
            agent,
            option: source.label().to_string(),
        });
        source
    }

    /// Materializes a value for `param` from an already chosen source.
    pub fn generate_value<R: Rng + ?Sized>(
        &self,
        param: &ParameterSpec,
        source: ValueSource,
        rng: &mut R,
        trace: &mut Vec<Decision>,
    ) -> Result<GeneratedValue, InputError> {
        let value = self.value_from(&param.normalized_name, &param.schema, source, rng, trace, 0)?;
        Ok(GeneratedValue { value, source })
    }

    fn value_from<R: Rng + ?Sized>(
        &self,
        name: &str,
        schema: &Schema,
        source: ValueSource,
        rng: &mut R,
        trace: &mut Vec<Decision>,
        depth: usize,
    ) -> Result<Value, InputError> {
        if !self.is_applicable(source, name, schema) {
            return Err(InputError::SourceNotApplicable {
                value_source: source,
                parameter: name.to_string(),
            });
        }
        let pick = |values: Vec<&Value>, rng: &mut R| values[rng.gen_range(0..values.len())].clone();
        let ok = |v: &&Value| shape_matches(schema.kind, v);
        let d = &self.dictionaries;
        Ok(match source {
            ValueSource::Random => self.random_structured(name, schema, rng, trace, depth)?,
            ValueSource::Default => schema.default_value.clone().unwrap_or(Value::Null),
            ValueSource::Enum => pick(schema.enum_values.iter().flatten().collect(), rng),
            ValueSource::Examples => pick(schema.example_values.iter().collect(), rng),
            ValueSource::ResponseDictionary => pick(d.response(name).into_iter().flatten().filter(ok).collect(), rng),
            ValueSource::RequestDictionary => pick(d.request(name).into_iter().flatten().filter(ok).collect(), rng),
            ValueSource::LargeLanguageModelDictionary => {
                pick(d.llm(name).into_iter().flatten().filter(ok).collect(), rng)
            }
            ValueSource::LastResponseDictionary => d.last_response(name).cloned().unwrap_or(Value::Null),
            ValueSource::LastRequestDictionary => d.last_request(name).cloned().unwrap_or(Value::Null),
        })
    }

    /// Random generation for compound kinds goes through the agents: each
    /// object property and array item gets its own decisions.
    fn random_structured<R: Rng + ?Sized>(
        &self,
        name: &str,
        schema: &Schema,
        rng: &mut R,
        trace: &mut Vec<Decision>,
        depth: usize,
    ) -> Result<Value, InputError> {
        const MAX_DEPTH: usize = 8;
        match schema.kind {
            SchemaKind::Array if schema.enum_values.is_none() && depth < MAX_DEPTH => {
                let len = self.decide_array_length(name, schema, rng, trace)?;
                let items = schema.items.as_deref().cloned().unwrap_or_else(Schema::string);
                let item_key = format!("{name}[]");
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    let source = self.select_for(&item_key, name, &items, rng, trace);
                    out.push(self.value_from(name, &items, source, rng, trace, depth + 1)?);
                }
                Ok(Value::Array(out))
            }
            SchemaKind::Object if schema.enum_values.is_none() && depth < MAX_DEPTH => {
                let mut map = Map::new();
                for (prop_name, prop) in &schema.properties {
                    let key = crate::oas::normalize_name(prop_name);
                    if !prop.required && !self.decide_presence(&key, rng, trace) {
                        continue;
                    }
                    let source = self.select_value_source(&key, &prop.schema, rng, trace);
                    map.insert(
                        prop_name.clone(),
                        self.value_from(&key, &prop.schema, source, rng, trace, depth + 1)?,
                    );
                }
                Ok(Value::Object(map))
            }
            _ => Ok(random_value(schema, rng)),
        }
    }

    /// Source selection where the agent key differs from the dictionary key
    /// (array items).
    fn select_for<R: Rng + ?Sized>(
        &self,
        agent_name: &str,
        dict_name: &str,
        schema: &Schema,
        rng: &mut R,
        trace: &mut Vec<Decision>,
    ) -> ValueSource {
        let agent = AgentKey::new(agent_name, DecisionKind::Source);
        let options: Vec<(ValueSource, u64)> = self
            .applicable_sources(dict_name, schema)
            .into_iter()
            .map(|s| (s, self.store.tally(&agent, s.label())))
            .collect();
        let source = *probability_match(&options, self.epsilon, rng);
        trace.push(Decision {
            agent,
            option: source.label().to_string(),
        });
        source
    }

    /// Chooses presence, sources and values for every parameter of `op`.
    pub fn generate_request<R: Rng + ?Sized>(
        &self,
        op: &OperationSpec,
        rng: &mut R,
    ) -> Result<GeneratedRequest, InputError> {
        let mut arguments = Arguments::new();
        let mut provenance = BTreeMap::new();
        let mut trace = Vec::new();
        for (i, param) in op.parameters.iter().enumerate() {
            if !param.required && !self.decide_presence(&param.normalized_name, rng, &mut trace) {
                continue;
            }
            let source = self.select_value_source(&param.normalized_name, &param.schema, rng, &mut trace);
            let generated = self.generate_value(param, source, rng, &mut trace)?;
            arguments.insert(i, generated.value);
            provenance.insert(i, source);
        }
        Ok(GeneratedRequest {
            arguments,
            provenance,
            trace,
        })
    }

    pub fn reward_decisions(&mut self, trace: &[Decision], success: bool) {
        self.store.reward_decisions(trace, success);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::{validate_against_schema, ParamLocation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use serde_json::json;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn quantity() -> ParameterSpec {
        ParameterSpec::new(
            "quantity",
            ParamLocation::Query,
            false,
            Schema::integer()
                .with_range(Some(1.0), Some(100.0))
                .with_default(json!(1)),
        )
    }

    #[test]
    fn random_quantity_in_bounds() {
        let g = InputGenerator::default();
        let mut r = rng(1);
        for _ in 0..500 {
            let v = g
                .generate_value(&quantity(), ValueSource::Random, &mut r, &mut vec![])
                .unwrap()
                .value;
            let x = v.as_i64().unwrap();
            assert!((1..=100).contains(&x));
        }
    }

    #[test]
    fn default_source_gives_default() {
        let g = InputGenerator::default();
        let v = g
            .generate_value(&quantity(), ValueSource::Default, &mut rng(1), &mut vec![])
            .unwrap();
        assert_eq!(v.value, json!(1));
    }

    #[test]
    fn last_response_dictionary() {
        let mut g = InputGenerator::default();
        g.dictionaries.record_response("productid", json!(17));
        g.dictionaries.record_response("productid", json!(42));
        let p = ParameterSpec::new("productId", ParamLocation::Query, true, Schema::integer());
        let v = g
            .generate_value(&p, ValueSource::LastResponseDictionary, &mut rng(1), &mut vec![])
            .unwrap();
        assert_eq!(v.value, json!(42));
    }

    #[test]
    fn inapplicable_source_is_an_error() {
        let g = InputGenerator::default();
        let p = ParameterSpec::new("keyword", ParamLocation::Query, true, Schema::string());
        assert!(matches!(
            g.generate_value(&p, ValueSource::Default, &mut rng(1), &mut vec![]),
            Err(InputError::SourceNotApplicable { .. })
        ));
    }

    #[test]
    fn only_random_applies_to_bare_parameter() {
        let g = InputGenerator::default();
        let mut trace = vec![];
        let mut r = rng(9);
        for _ in 0..50 {
            assert_eq!(
                g.select_value_source("keyword", &Schema::string(), &mut r, &mut trace),
                ValueSource::Random
            );
        }
    }

    #[test]
    fn source_selection_follows_tallies() {
        let mut g = InputGenerator::new(0.0);
        g.dictionaries.record_response("productid", json!(5001));
        let agent = AgentKey::new("productid", DecisionKind::Source);
        g.store.reward(&agent, "Random");
        for _ in 0..9 {
            g.store.reward(&agent, "ResponseDictionary");
        }
        let mut r = rng(3);
        let schema = Schema::integer();
        let hits = (0..20_000)
            .filter(|_| {
                g.select_value_source("productid", &schema, &mut r, &mut vec![])
                    == ValueSource::ResponseDictionary
            })
            .count();
        let f = hits as f64 / 20_000.0;
        assert!((f - 0.9).abs() <= 0.02, "{f}");
    }

    #[test]
    fn pure_exploration_is_uniform_over_applicable() {
        let mut g = InputGenerator::new(1.0);
        g.dictionaries.record_response("x", json!(1));
        let agent = AgentKey::new("x", DecisionKind::Source);
        for _ in 0..100 {
            g.store.reward(&agent, "Random");
        }
        let applicable = g.applicable_sources("x", &Schema::integer());
        assert_eq!(
            applicable,
            [ValueSource::Random, ValueSource::ResponseDictionary, ValueSource::LastResponseDictionary]
        );
        let mut r = rng(4);
        let n = 30_000;
        let random = (0..n)
            .filter(|_| g.select_value_source("x", &Schema::integer(), &mut r, &mut vec![]) == ValueSource::Random)
            .count();
        let f = random as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() <= 0.02, "{f}");
    }

    #[test]
    fn presence_follows_experience() {
        let mut g = InputGenerator::new(0.0);
        let agent = AgentKey::new("quantity", DecisionKind::Presence);
        for _ in 0..8 {
            g.store.reward(&agent, INCLUDE);
        }
        for _ in 0..2 {
            g.store.reward(&agent, EXCLUDE);
        }
        let mut r = rng(5);
        let inc = (0..20_000)
            .filter(|_| g.decide_presence("quantity", &mut r, &mut vec![]))
            .count();
        assert!((inc as f64 / 20_000.0 - 0.8).abs() <= 0.02);

        let cold = InputGenerator::new(0.0);
        let inc = (0..20_000)
            .filter(|_| cold.decide_presence("other", &mut r, &mut vec![]))
            .count();
        assert!((inc as f64 / 20_000.0 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn required_parameters_always_present() {
        let op = OperationSpec {
            index: 0,
            operation_id: "op".into(),
            method: crate::oas::HttpMethod::Get,
            path: "/x".into(),
            parameters: vec![
                ParameterSpec::new("keyword", ParamLocation::Query, true, Schema::string()),
                quantity(),
            ],
            request_body: None,
            description: None,
        };
        let g = InputGenerator::default();
        let mut r = rng(6);
        for _ in 0..200 {
            let req = g.generate_request(&op, &mut r).unwrap();
            assert!(req.arguments.contains_key(&0));
            assert!(!req
                .trace
                .iter()
                .any(|d| d.agent.name == "keyword" && d.agent.kind == DecisionKind::Presence));
        }
    }

    #[test]
    fn array_length_classes() {
        let g = InputGenerator::new(0.0);
        let mut r = rng(7);
        let unbounded = Schema::array(Schema::integer());
        let agent = AgentKey::new("a", DecisionKind::ArrayLength);
        let mut only_a = InputGenerator::new(0.0);
        only_a.store.reward(&agent, "A");
        assert_eq!(only_a.decide_array_length("a", &unbounded, &mut r, &mut vec![]).unwrap(), 0);
        let mut only_c = InputGenerator::new(0.0);
        only_c.store.reward(&agent, "C");
        for _ in 0..200 {
            let len = only_c.decide_array_length("a", &unbounded, &mut r, &mut vec![]).unwrap();
            assert!((2..=5).contains(&len));
        }
        let min_one = Schema::array(Schema::integer()).with_items_bounds(Some(1), None);
        for _ in 0..500 {
            let mut trace = vec![];
            let len = g.decide_array_length("b", &min_one, &mut r, &mut trace).unwrap();
            assert!(len >= 1);
            assert_ne!(trace[0].option, "A");
        }
        let tight = Schema::array(Schema::integer()).with_items_bounds(Some(3), Some(3));
        assert_eq!(g.decide_array_length("c", &tight, &mut r, &mut vec![]).unwrap(), 3);
    }

    #[test]
    fn infeasible_array_schema() {
        let g = InputGenerator::default();
        let broken = Schema::array(Schema::integer()).with_items_bounds(Some(2), Some(1));
        assert!(matches!(
            g.decide_array_length("z", &broken, &mut rng(1), &mut vec![]),
            Err(InputError::NoFeasibleClass { .. })
        ));
    }

    #[test]
    fn random_values_respect_edge_ranges() {
        let mut r = rng(8);
        let cases = [
            Schema::integer().with_range(Some(1000.0), None),
            Schema::integer().with_range(None, Some(-50.0)),
            Schema::number().with_range(Some(0.5), Some(0.75)),
            Schema::string().with_length(Some(15), None),
            Schema::string().with_length(None, Some(0)),
            Schema::string().with_length(Some(2), Some(3)),
            Schema::array(Schema::boolean()).with_items_bounds(Some(7), None),
        ];
        for schema in &cases {
            for _ in 0..200 {
                let v = random_value(schema, &mut r);
                assert!(validate_against_schema(&v, schema).is_valid(), "{v} vs {schema:?}");
            }
        }
    }

    #[test]
    fn dictionary_values_must_match_shape() {
        let mut g = InputGenerator::default();
        g.dictionaries.record_response("tags", json!("x"));
        let array = Schema::array(Schema::string());
        assert_eq!(g.applicable_sources("tags", &array), [ValueSource::Random]);
        assert!(g
            .applicable_sources("tags", &Schema::string())
            .contains(&ValueSource::ResponseDictionary));
    }

    #[test]
    fn nested_objects_use_property_agents() {
        let body = Schema::object([
            ("name", Schema::string(), true),
            ("nickname", Schema::string(), false),
            ("tags", Schema::array(Schema::integer()), false),
        ]);
        let p = ParameterSpec::new("profile", ParamLocation::BodyField, true, body.clone());
        let g = InputGenerator::default();
        let mut r = rng(10);
        let mut saw_presence = false;
        for _ in 0..100 {
            let mut trace = vec![];
            let v = g.generate_value(&p, ValueSource::Random, &mut r, &mut trace).unwrap();
            assert!(validate_against_schema(&v.value, &body).is_valid());
            assert!(v.value.get("name").is_some());
            saw_presence |= trace.iter().any(|d| d.agent.name == "nickname");
        }
        assert!(saw_presence);
    }
}
