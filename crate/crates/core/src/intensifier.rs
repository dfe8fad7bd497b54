//! Replays of a freshly successful request under small, single-aspect
//! mutations, some meant to stay valid and some meant to break the contract.

use crate::input::{random_string, random_value};
use crate::interaction::{build_request_lenient, ConcreteRequest, Interaction, RequestOrigin};
use crate::oas::{json_eq, Arguments, HttpMethod, OperationSpec, Schema, SchemaKind};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::fmt;

pub const DEFAULT_MUTANT_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    Nominal,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationOperator {
    AddParameter,
    RemoveParameter,
    RefillValue,
    NumberBoundaries,
    AddInvalidParameter,
    NumberOutOfBoundaries,
    ChangeHttpMethod,
    MissingRequired,
    WrongType,
    ConstraintsViolation,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 10] = [
        Self::AddParameter,
        Self::RemoveParameter,
        Self::RefillValue,
        Self::NumberBoundaries,
        Self::AddInvalidParameter,
        Self::NumberOutOfBoundaries,
        Self::ChangeHttpMethod,
        Self::MissingRequired,
        Self::WrongType,
        Self::ConstraintsViolation,
    ];

    pub fn kind(self) -> MutationKind {
        match self {
            Self::AddParameter | Self::RemoveParameter | Self::RefillValue | Self::NumberBoundaries => {
                MutationKind::Nominal
            }
            _ => MutationKind::Error,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AddParameter => "AddParameter",
            Self::RemoveParameter => "RemoveParameter",
            Self::RefillValue => "RefillValue",
            Self::NumberBoundaries => "NumberBoundaries",
            Self::AddInvalidParameter => "AddInvalidParameter",
            Self::NumberOutOfBoundaries => "NumberOutOfBoundaries",
            Self::ChangeHttpMethod => "ChangeHttpMethod",
            Self::MissingRequired => "MissingRequired",
            Self::WrongType => "WrongType",
            Self::ConstraintsViolation => "ConstraintsViolation",
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationTarget {
    /// Index into the operation's parameter list.
    Parameter(usize),
    Method(HttpMethod),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutation {
    pub operator: MutationOperator,
    pub target: MutationTarget,
}

/// A base request with exactly one mutation applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub mutation: Mutation,
    pub method: HttpMethod,
    pub arguments: Arguments,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntensifierError {
    #[error("{operator} does not apply to {target:?}")]
    InapplicableMutation {
        operator: MutationOperator,
        target: MutationTarget,
    },
}

/// The substitution used wherever a value of the wrong kind is needed.
pub fn wrong_type_value(kind: SchemaKind) -> Value {
    match kind {
        SchemaKind::String => json!(42),
        _ => json!("invalid"),
    }
}

/// Integer-aware inclusive bounds actually reachable by a value.
fn effective_bounds(schema: &Schema) -> (Option<f64>, Option<f64>) {
    let integer = schema.kind == SchemaKind::Integer;
    let lo = schema.minimum.map(|m| if integer { m.ceil() } else { m });
    let hi = schema.maximum.map(|m| if integer { m.floor() } else { m });
    (lo, hi)
}

fn number_value(kind: SchemaKind, x: f64) -> Value {
    if kind == SchemaKind::Integer {
        json!(x as i64)
    } else {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(json!(0))
    }
}

fn boundary_candidates(schema: &Schema) -> Vec<f64> {
    let (lo, hi) = effective_bounds(schema);
    let mut out: Vec<f64> = Vec::new();
    if let Some(l) = lo {
        out.extend([l, l + 1.0]);
    }
    if let Some(h) = hi {
        out.extend([h - 1.0, h]);
    }
    let within = |x: &f64| lo.is_none_or(|l| *x >= l) && hi.is_none_or(|h| *x <= h);
    let mut seen = Vec::new();
    for x in out.into_iter().filter(within) {
        if !seen.contains(&x) {
            seen.push(x);
        }
    }
    seen
}

fn out_of_bound_candidates(schema: &Schema) -> Vec<f64> {
    let (lo, hi) = effective_bounds(schema);
    lo.map(|l| l - 1.0).into_iter().chain(hi.map(|h| h + 1.0)).collect()
}

fn numeric_target(schema: &Schema) -> bool {
    schema.has_numeric_bound()
}

/// Every (operator, target) pairing valid for this base request.
pub fn applicable_mutations(args: &Arguments, op: &OperationSpec) -> Vec<Mutation> {
    let mut out = Vec::new();
    let mut push = |operator, target| out.push(Mutation { operator, target });
    for (i, param) in op.parameters.iter().enumerate() {
        let target = MutationTarget::Parameter(i);
        let present = args.contains_key(&i);
        if !present {
            if !param.required {
                push(MutationOperator::AddParameter, target);
                push(MutationOperator::AddInvalidParameter, target);
            }
            continue;
        }
        if param.required {
            push(MutationOperator::MissingRequired, target);
        } else {
            push(MutationOperator::RemoveParameter, target);
        }
        push(MutationOperator::RefillValue, target);
        push(MutationOperator::WrongType, target);
        if numeric_target(&param.schema) {
            if param.schema.enum_values.is_none() && !boundary_candidates(&param.schema).is_empty() {
                push(MutationOperator::NumberBoundaries, target);
            }
            push(MutationOperator::NumberOutOfBoundaries, target);
        }
        if !constraint_breakers(&param.schema).is_empty() {
            push(MutationOperator::ConstraintsViolation, target);
        }
    }
    for m in HttpMethod::ALL {
        if m != op.method {
            push(MutationOperator::ChangeHttpMethod, MutationTarget::Method(m));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Breaker {
    Enum,
    Minimum,
    Maximum,
    MinLength,
    MaxLength,
    MinItems,
    MaxItems,
    RequiredProperty,
}

fn constraint_breakers(schema: &Schema) -> Vec<Breaker> {
    use Breaker::*;
    [Enum, Minimum, Maximum, MinLength, MaxLength, MinItems, MaxItems, RequiredProperty]
        .into_iter()
        .filter(|b| b.applies(schema))
        .collect()
}

impl Breaker {
    fn applies(self, s: &Schema) -> bool {
        let numeric = s.kind.is_numeric();
        match self {
            Self::Enum => match (s.kind, &s.enum_values) {
                (SchemaKind::Boolean, Some(values)) => values.len() < 2,
                (SchemaKind::Array | SchemaKind::Object, _) => false,
                (_, values) => values.is_some(),
            },
            Self::Minimum => numeric && s.minimum.is_some(),
            Self::Maximum => numeric && s.maximum.is_some(),
            Self::MinLength => s.kind == SchemaKind::String && s.min_length.is_some_and(|m| m > 0),
            Self::MaxLength => s.kind == SchemaKind::String && s.max_length.is_some(),
            Self::MinItems => s.kind == SchemaKind::Array && s.min_items.is_some_and(|m| m > 0),
            Self::MaxItems => s.kind == SchemaKind::Array && s.max_items.is_some(),
            Self::RequiredProperty => s.kind == SchemaKind::Object && s.properties.values().any(|p| p.required),
        }
    }

    fn violate<R: Rng + ?Sized>(self, s: &Schema, current: &Value, rng: &mut R) -> Value {
        let items = || s.items.as_deref().cloned().unwrap_or_else(Schema::string);
        match self {
            Self::Enum => {
                let values = s.enum_values.as_deref().unwrap_or(&[]);
                match s.kind {
                    SchemaKind::Boolean => json!(!values.first().and_then(Value::as_bool).unwrap_or(false)),
                    SchemaKind::String => {
                        let mut candidate = format!("{}_x", values.first().and_then(Value::as_str).unwrap_or(""));
                        while values.iter().any(|v| v.as_str() == Some(candidate.as_str())) {
                            candidate.push('x');
                        }
                        json!(candidate)
                    }
                    _ => {
                        let top = values.iter().filter_map(Value::as_f64).fold(f64::MIN, f64::max);
                        number_value(s.kind, top.floor() + 1.0)
                    }
                }
            }
            Self::Minimum => number_value(s.kind, effective_bounds(s).0.unwrap_or(0.0) - 1.0),
            Self::Maximum => number_value(s.kind, effective_bounds(s).1.unwrap_or(0.0) + 1.0),
            Self::MinLength => {
                let len = s.min_length.unwrap_or(1) - 1;
                json!(random_string(len, rng))
            }
            Self::MaxLength => {
                let len = s.max_length.unwrap_or(0) + 1;
                json!(random_string(len, rng))
            }
            Self::MinItems => {
                let item = items();
                let len = s.min_items.unwrap_or(1) - 1;
                Value::Array((0..len).map(|_| random_value(&item, rng)).collect())
            }
            Self::MaxItems => {
                let item = items();
                let len = s.max_items.unwrap_or(0) + 1;
                Value::Array((0..len).map(|_| random_value(&item, rng)).collect())
            }
            Self::RequiredProperty => {
                let mut map = match current {
                    Value::Object(m) => m.clone(),
                    _ => Map::new(),
                };
                if let Some(name) = s.properties.iter().find(|(_, p)| p.required).map(|(n, _)| n.clone()) {
                    map.remove(&name);
                }
                Value::Object(map)
            }
        }
    }
}

/// Applies one mutation to a copy of the base arguments.
pub fn apply_mutation<R: Rng + ?Sized>(
    args: &Arguments,
    op: &OperationSpec,
    mutation: Mutation,
    rng: &mut R,
) -> Result<Mutant, IntensifierError> {
    let inapplicable = || IntensifierError::InapplicableMutation {
        operator: mutation.operator,
        target: mutation.target,
    };
    let mut mutant = Mutant {
        mutation,
        method: op.method,
        arguments: args.clone(),
    };
    let (i, param) = match mutation.target {
        MutationTarget::Method(m) => {
            if mutation.operator != MutationOperator::ChangeHttpMethod || m == op.method {
                return Err(inapplicable());
            }
            mutant.method = m;
            return Ok(mutant);
        }
        MutationTarget::Parameter(i) => match op.parameters.get(i) {
            Some(p) => (i, p),
            None => return Err(inapplicable()),
        },
    };
    let schema = &param.schema;
    let present = args.get(&i);
    use MutationOperator::*;
    match (mutation.operator, present) {
        (AddParameter, None) if !param.required => {
            mutant.arguments.insert(i, random_value(schema, rng));
        }
        (AddInvalidParameter, None) if !param.required => {
            mutant.arguments.insert(i, wrong_type_value(schema.kind));
        }
        (RemoveParameter, Some(_)) if !param.required => {
            mutant.arguments.remove(&i);
        }
        (MissingRequired, Some(_)) if param.required => {
            mutant.arguments.remove(&i);
        }
        (RefillValue, Some(old)) => {
            let mut fresh = random_value(schema, rng);
            for _ in 0..8 {
                if !json_eq(&fresh, old) {
                    break;
                }
                fresh = random_value(schema, rng);
            }
            mutant.arguments.insert(i, fresh);
        }
        (WrongType, Some(_)) => {
            mutant.arguments.insert(i, wrong_type_value(schema.kind));
        }
        (NumberBoundaries, Some(_)) if numeric_target(schema) && schema.enum_values.is_none() => {
            let candidates = boundary_candidates(schema);
            let x = *candidates.choose(rng).ok_or_else(inapplicable)?;
            mutant.arguments.insert(i, number_value(schema.kind, x));
        }
        (NumberOutOfBoundaries, Some(_)) if numeric_target(schema) => {
            let x = *out_of_bound_candidates(schema).choose(rng).ok_or_else(inapplicable)?;
            mutant.arguments.insert(i, number_value(schema.kind, x));
        }
        (ConstraintsViolation, Some(old)) => {
            let breakers = constraint_breakers(schema);
            let breaker = *breakers.choose(rng).ok_or_else(inapplicable)?;
            mutant.arguments.insert(i, breaker.violate(schema, old, rng));
        }
        _ => return Err(inapplicable()),
    }
    Ok(mutant)
}

/// Concrete request for a mutant. An omitted path parameter leaves an empty
/// segment rather than failing the build.
pub fn mutant_request(op: &OperationSpec, mutant: &Mutant, auth: &[(String, String)]) -> ConcreteRequest {
    let mut request = build_request_lenient(op, &mutant.arguments, auth);
    request.method = mutant.method;
    request.origin = RequestOrigin::Mutant {
        operator: mutant.mutation.operator.name().to_string(),
        nominal: mutant.mutation.operator.kind() == MutationKind::Nominal,
    };
    request
}

/// All applicable mutants in shuffled order, at most `cap` of them.
pub fn plan_mutants<R: Rng + ?Sized>(args: &Arguments, op: &OperationSpec, cap: usize, rng: &mut R) -> Vec<Mutant> {
    let mut mutations = applicable_mutations(args, op);
    mutations.shuffle(rng);
    mutations
        .into_iter()
        .filter_map(|m| apply_mutation(args, op, m, rng).ok())
        .take(cap)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensifyOutcome {
    pub executed: Vec<Interaction>,
    pub budget_exhausted: bool,
}

/// Fires at most once per operation, on its first success.
#[derive(Debug, Clone)]
pub struct Intensifier {
    pub cap: usize,
    triggered: BTreeSet<usize>,
}

impl Default for Intensifier {
    fn default() -> Self {
        Self::new(DEFAULT_MUTANT_CAP)
    }
}

impl Intensifier {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            triggered: BTreeSet::new(),
        }
    }

    pub fn has_triggered(&self, operation: usize) -> bool {
        self.triggered.contains(&operation)
    }

    /// Replays `base` as mutants. `execute` sends one request and returns
    /// `None` once the request budget is spent.
    pub fn intensify<R, F>(&mut self, base: &Interaction, op: &OperationSpec, auth: &[(String, String)], rng: &mut R, mut execute: F) -> IntensifyOutcome
    where
        R: Rng + ?Sized,
        F: FnMut(ConcreteRequest) -> Option<Interaction>,
    {
        let mut outcome = IntensifyOutcome {
            executed: Vec::new(),
            budget_exhausted: false,
        };
        if !base.is_success() || !self.triggered.insert(op.index) {
            return outcome;
        }
        for mutant in plan_mutants(&base.request.arguments, op, self.cap, rng) {
            match execute(mutant_request(op, &mutant, auth)) {
                Some(i) => outcome.executed.push(i),
                None => {
                    outcome.budget_exhausted = true;
                    break;
                }
            }
        }
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::{ParamLocation, ParameterSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cart() -> OperationSpec {
        OperationSpec {
            index: 1,
            operation_id: "addProductToCart".into(),
            method: HttpMethod::Post,
            path: "/addProductToCart".into(),
            parameters: vec![
                ParameterSpec::new("productId", ParamLocation::Query, true, Schema::integer()),
                ParameterSpec::new(
                    "quantity",
                    ParamLocation::Query,
                    false,
                    Schema::integer().with_range(Some(1.0), Some(100.0)).with_default(json!(1)),
                ),
            ],
            request_body: None,
            description: None,
        }
    }

    fn checkout() -> OperationSpec {
        OperationSpec {
            index: 2,
            operation_id: "checkout".into(),
            method: HttpMethod::Post,
            path: "/checkout".into(),
            parameters: vec![],
            request_body: None,
            description: None,
        }
    }

    #[test]
    fn catalog_has_ten_operators() {
        let nominal = MutationOperator::ALL
            .iter()
            .filter(|o| o.kind() == MutationKind::Nominal)
            .count();
        assert_eq!((MutationOperator::ALL.len(), nominal), (10, 4));
    }

    #[test]
    fn checkout_only_changes_method() {
        let muts = applicable_mutations(&Arguments::new(), &checkout());
        assert_eq!(muts.len(), 4);
        assert!(muts.iter().all(|m| m.operator == MutationOperator::ChangeHttpMethod));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let methods: BTreeSet<_> = muts
            .iter()
            .map(|m| apply_mutation(&Arguments::new(), &checkout(), *m, &mut rng).unwrap().method)
            .collect();
        let expect: BTreeSet<_> = [HttpMethod::Get, HttpMethod::Put, HttpMethod::Patch, HttpMethod::Delete].into();
        assert_eq!(methods, expect);
        let req = mutant_request(&checkout(), &apply_mutation(&Arguments::new(), &checkout(), muts[0], &mut rng).unwrap(), &[]);
        assert_eq!(req.path, "/checkout");
    }

    #[test]
    fn quantity_boundaries() {
        let args: Arguments = [(0, json!(4711)), (1, json!(3))].into_iter().collect();
        let muts = applicable_mutations(&args, &cart());
        let on_quantity = |op| muts.contains(&Mutation { operator: op, target: MutationTarget::Parameter(1) });
        assert!(on_quantity(MutationOperator::NumberBoundaries));
        assert!(on_quantity(MutationOperator::NumberOutOfBoundaries));
        assert!(!muts.iter().any(|m| m.operator == MutationOperator::AddParameter));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut inside = BTreeSet::new();
        let mut outside = BTreeSet::new();
        for _ in 0..200 {
            let m = Mutation { operator: MutationOperator::NumberBoundaries, target: MutationTarget::Parameter(1) };
            inside.insert(apply_mutation(&args, &cart(), m, &mut rng).unwrap().arguments[&1].as_i64().unwrap());
            let m = Mutation { operator: MutationOperator::NumberOutOfBoundaries, target: MutationTarget::Parameter(1) };
            outside.insert(apply_mutation(&args, &cart(), m, &mut rng).unwrap().arguments[&1].as_i64().unwrap());
        }
        assert_eq!(inside, [1, 2, 99, 100].into());
        assert_eq!(outside, [0, 101].into());
    }

    #[test]
    fn inapplicable_pairings_rejected() {
        let args: Arguments = [(0, json!(4711))].into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bad = [
            Mutation { operator: MutationOperator::RemoveParameter, target: MutationTarget::Parameter(0) },
            Mutation { operator: MutationOperator::NumberBoundaries, target: MutationTarget::Parameter(0) },
            Mutation { operator: MutationOperator::MissingRequired, target: MutationTarget::Parameter(1) },
            Mutation { operator: MutationOperator::ChangeHttpMethod, target: MutationTarget::Method(HttpMethod::Post) },
            Mutation { operator: MutationOperator::WrongType, target: MutationTarget::Method(HttpMethod::Get) },
            Mutation { operator: MutationOperator::RefillValue, target: MutationTarget::Parameter(9) },
        ];
        for m in bad {
            assert!(apply_mutation(&args, &cart(), m, &mut rng).is_err(), "{m:?}");
        }
    }

    fn success(op: &OperationSpec, args: Arguments) -> Interaction {
        Interaction {
            schema_version: 1,
            seq: 0,
            timestamp_ms: 0,
            operation_id: op.operation_id.clone(),
            request: build_request_lenient(op, &args, &[]),
            status: Some(200),
            transport_error: None,
            response_headers: vec![],
            response_body: String::new(),
            body_truncated: false,
            outcome: crate::explorer::OutcomeClass::Success2xx,
            unusual_status: false,
            elapsed_ms: 0.0,
        }
    }

    #[test]
    fn intensify_respects_cap_budget_and_trigger() {
        let op = cart();
        let args: Arguments = [(0, json!(4711)), (1, json!(3))].into_iter().collect();
        let base = success(&op, args.clone());
        let total = applicable_mutations(&args, &op).len();
        let mut rng = ChaCha8Rng::seed_from_u64(4);

        let mut all = Intensifier::new(50);
        let out = all.intensify(&base, &op, &[], &mut rng, |r| Some(success(&op, r.arguments)));
        assert_eq!(out.executed.len(), total);
        assert!(!out.budget_exhausted);
        let again = all.intensify(&base, &op, &[], &mut rng, |r| Some(success(&op, r.arguments)));
        assert!(again.executed.is_empty());

        let mut limited = Intensifier::new(50);
        let mut left = 3;
        let out = limited.intensify(&base, &op, &[], &mut rng, |r| {
            (left > 0).then(|| {
                left -= 1;
                success(&op, r.arguments)
            })
        });
        assert_eq!(out.executed.len(), 3);
        assert!(out.budget_exhausted);

        let mut capped = Intensifier::new(2);
        let out = capped.intensify(&base, &op, &[], &mut rng, |r| {
            let mut i = success(&op, r.arguments.clone());
            i.request = r;
            Some(i)
        });
        assert_eq!(out.executed.len(), 2);
        assert!(out.executed.iter().all(|i| i.request.origin.is_mutant()));
    }
}
