use super::schema::{Schema, SchemaKind};
use serde::Serialize;
use serde_json::Value;
use std::fmt;

/// A single constraint a value fails to satisfy. `path` locates the offending
/// sub-value (`""` for the root, `.name` for properties, `[i]` for items).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    WrongType { path: String, expected: SchemaKind },
    BelowMinimum { path: String, minimum: f64 },
    AboveMaximum { path: String, maximum: f64 },
    TooShort { path: String, min_length: u64 },
    TooLong { path: String, max_length: u64 },
    NotInEnum { path: String },
    MissingProperty { path: String, name: String },
    TooFewItems { path: String, min_items: u64 },
    TooManyItems { path: String, max_items: u64 },
    /// A required operation parameter is absent from a request.
    MissingParameter { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WrongType { path, expected } => write!(f, "{path}: expected {expected}"),
            Self::BelowMinimum { path, minimum } => write!(f, "{path}: below minimum {minimum}"),
            Self::AboveMaximum { path, maximum } => write!(f, "{path}: above maximum {maximum}"),
            Self::TooShort { path, min_length } => {
                write!(f, "{path}: shorter than {min_length}")
            }
            Self::TooLong { path, max_length } => write!(f, "{path}: longer than {max_length}"),
            Self::NotInEnum { path } => write!(f, "{path}: not an enumerated value"),
            Self::MissingProperty { path, name } => {
                write!(f, "{path}: missing required property {name}")
            }
            Self::TooFewItems { path, min_items } => {
                write!(f, "{path}: fewer than {min_items} items")
            }
            Self::TooManyItems { path, max_items } => {
                write!(f, "{path}: more than {max_items} items")
            }
            Self::MissingParameter { name } => write!(f, "missing required parameter {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_against_schema(value: &Value, schema: &Schema) -> Verdict {
    let mut violations = Vec::new();
    check(value, schema, String::new(), &mut violations);
    Verdict { violations }
}

/// Equality used for enum membership: numbers compare numerically.
pub(crate) fn json_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}

fn check(value: &Value, schema: &Schema, path: String, out: &mut Vec<Violation>) {
    if !schema.kind.admits(value) {
        out.push(Violation::WrongType {
            path,
            expected: schema.kind,
        });
        return;
    }
    if let Some(values) = &schema.enum_values {
        if !values.iter().any(|v| json_eq(v, value)) {
            out.push(Violation::NotInEnum { path: path.clone() });
        }
    }
    match value {
        Value::Number(n) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if let Some(minimum) = schema.minimum {
                if x < minimum {
                    out.push(Violation::BelowMinimum {
                        path: path.clone(),
                        minimum,
                    });
                }
            }
            if let Some(maximum) = schema.maximum {
                if x > maximum {
                    out.push(Violation::AboveMaximum { path, maximum });
                }
            }
        }
        Value::String(s) => {
            let len = s.chars().count() as u64;
            if let Some(min_length) = schema.min_length {
                if len < min_length {
                    out.push(Violation::TooShort {
                        path: path.clone(),
                        min_length,
                    });
                }
            }
            if let Some(max_length) = schema.max_length {
                if len > max_length {
                    out.push(Violation::TooLong { path, max_length });
                }
            }
        }
        Value::Array(items) => {
            let len = items.len() as u64;
            if let Some(min_items) = schema.min_items {
                if len < min_items {
                    out.push(Violation::TooFewItems {
                        path: path.clone(),
                        min_items,
                    });
                }
            }
            if let Some(max_items) = schema.max_items {
                if len > max_items {
                    out.push(Violation::TooManyItems {
                        path: path.clone(),
                        max_items,
                    });
                }
            }
            if let Some(item_schema) = &schema.items {
                for (i, item) in items.iter().enumerate() {
                    check(item, item_schema, format!("{path}[{i}]"), out);
                }
            }
        }
        Value::Object(map) => {
            for (name, prop) in &schema.properties {
                match map.get(name) {
                    Some(v) => check(v, &prop.schema, format!("{path}.{name}"), out),
                    None if prop.required => out.push(Violation::MissingProperty {
                        path: path.clone(),
                        name: name.clone(),
                    }),
                    None => {}
                }
            }
        }
        Value::Bool(_) | Value::Null => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn quantity() -> Schema {
        Schema::integer()
            .with_range(Some(1.0), Some(100.0))
            .with_default(json!(1))
    }

    #[test]
    fn quantity_in_range_is_valid() {
        assert!(validate_against_schema(&json!(50), &quantity()).is_valid());
    }

    #[test]
    fn quantity_zero_is_below_minimum() {
        let v = validate_against_schema(&json!(0), &quantity());
        assert_eq!(
            v.violations,
            vec![Violation::BelowMinimum {
                path: String::new(),
                minimum: 1.0
            }]
        );
    }

    #[test]
    fn string_for_integer_is_wrong_type() {
        let v = validate_against_schema(&json!("abc"), &Schema::integer());
        assert!(matches!(
            v.violations.as_slice(),
            [Violation::WrongType {
                expected: SchemaKind::Integer,
                ..
            }]
        ));
    }

    #[test]
    fn lists_every_violation() {
        let schema = Schema::object([
            ("name", Schema::string().with_length(Some(3), Some(5)), true),
            ("tags", Schema::array(Schema::integer()).with_items_bounds(None, Some(1)), false),
            ("id", Schema::integer(), true),
        ]);
        let v = validate_against_schema(&json!({"name": "ab", "tags": [1, "x"]}), &schema);
        assert_eq!(v.violations.len(), 4, "{:?}", v.violations);
    }

    #[test]
    fn float_with_zero_fraction_is_integer() {
        assert!(validate_against_schema(&json!(3.0), &Schema::integer()).is_valid());
        assert!(!validate_against_schema(&json!(3.5), &Schema::integer()).is_valid());
    }

    #[test]
    fn enum_membership_is_numeric() {
        let s = Schema::number().with_enum(vec![json!(1), json!(2.5)]);
        assert!(validate_against_schema(&json!(1.0), &s).is_valid());
        assert!(!validate_against_schema(&json!(3), &s).is_valid());
    }
}
