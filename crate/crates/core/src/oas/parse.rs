use super::{
    path_placeholders, ApiModel, HttpMethod, OasError, OperationSpec, ParamLocation,
    ParameterSpec, Property, Schema, SchemaKind,
};
use indexmap::IndexMap;
use serde_json::{Map, Value};

const MAX_REF_DEPTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    Yaml,
    Json,
    #[default]
    Auto,
}

/// Parses an OpenAPI document, logging one warning per dropped construct.
pub fn parse_spec(document: &[u8], hint: FormatHint) -> Result<ApiModel, OasError> {
    let (model, warnings) = parse_spec_with_warnings(document, hint)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(model)
}

pub fn parse_spec_with_warnings(
    document: &[u8],
    hint: FormatHint,
) -> Result<(ApiModel, Vec<String>), OasError> {
    let root = load_document(document, hint)?;
    let mut parser = Parser {
        root: &root,
        warnings: Vec::new(),
    };
    let model = parser.api()?;
    Ok((model, parser.warnings))
}

fn load_document(document: &[u8], hint: FormatHint) -> Result<Value, OasError> {
    let malformed = |e: &dyn std::fmt::Display| OasError::MalformedDocument(e.to_string());
    let looks_json = || {
        document
            .iter()
            .find(|b| !b.is_ascii_whitespace())
            .is_some_and(|b| *b == b'{')
    };
    let value = match hint {
        FormatHint::Json => serde_json::from_slice(document).map_err(|e| malformed(&e))?,
        FormatHint::Auto if looks_json() => {
            serde_json::from_slice(document).map_err(|e| malformed(&e))?
        }
        FormatHint::Yaml | FormatHint::Auto => {
            let yaml: serde_yaml::Value =
                serde_yaml::from_slice(document).map_err(|e| malformed(&e))?;
            yaml_to_json(yaml).map_err(|e| malformed(&e))?
        }
    };
    if !value.is_object() {
        return Err(OasError::MalformedDocument(
            "top level is not a mapping".into(),
        ));
    }
    Ok(value)
}

fn yaml_to_json(value: serde_yaml::Value) -> Result<Value, String> {
    use serde_yaml::Value as Y;
    Ok(match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                serde_json::Number::from_f64(f)
                    .map(Value::Number)
                    .ok_or_else(|| format!("non-finite number {f}"))?
            }
        }
        Y::String(s) => Value::String(s),
        Y::Sequence(items) => Value::Array(
            items
                .into_iter()
                .map(yaml_to_json)
                .collect::<Result<_, _>>()?,
        ),
        Y::Mapping(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let key = match k {
                    Y::String(s) => s,
                    Y::Number(n) => n.to_string(),
                    Y::Bool(b) => b.to_string(),
                    other => return Err(format!("unsupported mapping key {other:?}")),
                };
                out.insert(key, yaml_to_json(v)?);
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(tagged.value)?,
    })
}

struct Parser<'a> {
    root: &'a Value,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    fn api(&mut self) -> Result<ApiModel, OasError> {
        let root = self.root;
        if let Some(v) = root.get("swagger") {
            return Err(OasError::UnsupportedVersion(value_text(v)));
        }
        let version = root
            .get("openapi")
            .map(value_text)
            .ok_or_else(|| OasError::UnsupportedVersion("missing `openapi` field".into()))?;
        if !version.starts_with("3.") {
            return Err(OasError::UnsupportedVersion(version));
        }
        let title = root
            .pointer("/info/title")
            .and_then(Value::as_str)
            .unwrap_or("untitled")
            .to_string();
        let base_url = root
            .pointer("/servers/0/url")
            .and_then(Value::as_str)
            .unwrap_or("http://localhost")
            .trim_end_matches('/')
            .to_string();
        for key in ["webhooks", "x-callbacks"] {
            if root.get(key).is_some() {
                self.warn(format!("dropped top-level `{key}`"));
            }
        }

        let mut operations = Vec::new();
        if let Some(paths) = root.get("paths") {
            let paths = paths.as_object().ok_or_else(|| {
                OasError::MalformedDocument("`paths` is not a mapping".into())
            })?;
            for (path, item) in paths {
                let Some(item) = self.deref(item, &format!("paths.{path}")) else {
                    continue;
                };
                let Some(item) = item.as_object() else {
                    self.warn(format!("dropped path {path}: not a mapping"));
                    continue;
                };
                for key in item.keys() {
                    let known = matches!(
                        key.as_str(),
                        "get" | "post" | "put" | "patch" | "delete" | "parameters" | "summary"
                            | "description" | "servers"
                    ) || key.starts_with("x-");
                    if !known {
                        self.warn(format!("dropped `{key}` under path {path}"));
                    }
                }
                let shared = item.get("parameters");
                for method in HttpMethod::ALL {
                    let key = method.as_str().to_ascii_lowercase();
                    if let Some(op) = item.get(&key) {
                        let index = operations.len();
                        operations.push(self.operation(index, method, path, op, shared)?);
                    }
                }
            }
        }
        if operations.is_empty() {
            return Err(OasError::EmptyApi);
        }
        let mut seen = std::collections::BTreeSet::new();
        for op in &operations {
            if !seen.insert(op.operation_id.clone()) {
                self.warn(format!("duplicate operationId {}", op.operation_id));
            }
        }
        Ok(ApiModel {
            title,
            base_url,
            operations,
        })
    }

    fn operation(
        &mut self,
        index: usize,
        method: HttpMethod,
        path: &str,
        op: &'a Value,
        shared: Option<&'a Value>,
    ) -> Result<OperationSpec, OasError> {
        let at = format!("{method} {path}");
        let operation_id = op
            .get("operationId")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("{method}_{path}"));
        let description = op
            .get("description")
            .or_else(|| op.get("summary"))
            .and_then(Value::as_str)
            .map(str::to_string);
        for key in ["callbacks", "links"] {
            if op.get(key).is_some() {
                self.warn(format!("{at}: dropped `{key}`"));
            }
        }
        if let Some(responses) = op.get("responses").and_then(Value::as_object) {
            for (code, resp) in responses {
                if resp.get("links").is_some() {
                    self.warn(format!("{at}: dropped `links` of response {code}"));
                }
            }
        }

        let mut parameters: Vec<ParameterSpec> = Vec::new();
        let lists = [shared, op.get("parameters")];
        for list in lists.into_iter().flatten() {
            let Some(list) = list.as_array() else {
                self.warn(format!("{at}: `parameters` is not a list"));
                continue;
            };
            for (i, raw) in list.iter().enumerate() {
                let Some(param) = self.parameter(raw, &format!("{at} parameter #{i}"))? else {
                    continue;
                };
                // operation-level entries override path-level ones
                if let Some(slot) = parameters
                    .iter_mut()
                    .find(|p| p.location == param.location && p.name == param.name)
                {
                    *slot = param;
                } else {
                    parameters.push(param);
                }
            }
        }

        let placeholders: Vec<String> = path_placeholders(path)
            .into_iter()
            .map(str::to_string)
            .collect();
        parameters.retain(|p| {
            p.location != ParamLocation::Path || placeholders.iter().any(|n| n == &p.name)
        });
        let dropped_paths: Vec<_> = lists
            .into_iter()
            .flatten()
            .filter_map(Value::as_array)
            .flatten()
            .filter_map(|raw| self.deref_quiet(raw))
            .filter(|p| p.get("in").and_then(Value::as_str) == Some("path"))
            .filter_map(|p| p.get("name").and_then(Value::as_str))
            .filter(|name| !placeholders.iter().any(|n| n == name))
            .map(str::to_string)
            .collect();
        for name in dropped_paths {
            self.warn(format!("{at}: dropped path parameter {name} absent from template"));
        }
        for name in &placeholders {
            if !parameters
                .iter()
                .any(|p| p.location == ParamLocation::Path && &p.name == name)
            {
                self.warn(format!(
                    "{at}: placeholder {{{name}}} has no declared parameter; assuming string"
                ));
                parameters.push(ParameterSpec::new(
                    name.clone(),
                    ParamLocation::Path,
                    true,
                    Schema::string(),
                ));
            }
        }

        let mut request_body = None;
        if let Some(body) = op.get("requestBody") {
            if let Some(schema) = self.request_body(body, &at)? {
                for (name, prop) in &schema.properties {
                    if parameters
                        .iter()
                        .any(|p| p.location == ParamLocation::BodyField && &p.name == name)
                    {
                        continue;
                    }
                    parameters.push(ParameterSpec::new(
                        name.clone(),
                        ParamLocation::BodyField,
                        prop.required,
                        prop.schema.clone(),
                    ));
                }
                request_body = Some(schema);
            }
        }

        Ok(OperationSpec {
            index,
            operation_id,
            method,
            path: path.to_string(),
            parameters,
            request_body,
            description,
        })
    }

    fn parameter(&mut self, raw: &'a Value, at: &str) -> Result<Option<ParameterSpec>, OasError> {
        let Some(raw) = self.deref(raw, at) else {
            return Ok(None);
        };
        let Some(name) = raw.get("name").and_then(Value::as_str) else {
            return Err(OasError::MalformedDocument(format!("{at}: missing name")));
        };
        let location = match raw.get("in").and_then(Value::as_str) {
            Some("path") => ParamLocation::Path,
            Some("query") => ParamLocation::Query,
            Some("header") => ParamLocation::Header,
            Some(other) => {
                self.warn(format!("{at}: dropped parameter {name} in `{other}`"));
                return Ok(None);
            }
            None => return Err(OasError::MalformedDocument(format!("{at}: missing `in`"))),
        };
        let required = raw.get("required").and_then(Value::as_bool).unwrap_or(false);
        let at = format!("{at} ({name})");
        let mut schema = match raw.get("schema") {
            Some(s) => self.schema(s, &at, 0)?,
            None => {
                if raw.get("content").is_some() {
                    self.warn(format!("{at}: dropped `content` serialization; assuming string"));
                }
                Schema::string()
            }
        };
        if let Some(example) = raw.get("example") {
            push_unique(&mut schema.example_values, example.clone());
        }
        if let Some(examples) = raw.get("examples").and_then(Value::as_object) {
            for ex in examples.values() {
                if let Some(v) = self.deref_quiet(ex).and_then(|e| e.get("value")) {
                    push_unique(&mut schema.example_values, v.clone());
                }
            }
        }
        schema
            .check_consistency(&at)
            .map_err(OasError::MalformedDocument)?;
        let mut param = ParameterSpec::new(name, location, required, schema);
        param.description = raw
            .get("description")
            .and_then(Value::as_str)
            .map(str::to_string);
        Ok(Some(param))
    }

    fn request_body(&mut self, raw: &'a Value, at: &str) -> Result<Option<Schema>, OasError> {
        let Some(body) = self.deref(raw, &format!("{at} requestBody")) else {
            return Ok(None);
        };
        let Some(content) = body.get("content").and_then(Value::as_object) else {
            self.warn(format!("{at}: dropped requestBody without content"));
            return Ok(None);
        };
        let json = content
            .iter()
            .find(|(k, _)| k.as_str() == "application/json")
            .or_else(|| content.iter().find(|(k, _)| k.contains("json")));
        let Some((media, media_obj)) = json else {
            let kinds: Vec<_> = content.keys().cloned().collect();
            self.warn(format!("{at}: dropped non-JSON requestBody ({})", kinds.join(", ")));
            return Ok(None);
        };
        let Some(raw_schema) = media_obj.get("schema") else {
            self.warn(format!("{at}: dropped requestBody {media} without schema"));
            return Ok(None);
        };
        let schema = self.schema(raw_schema, &format!("{at} body"), 0)?;
        if schema.kind != SchemaKind::Object {
            self.warn(format!(
                "{at}: dropped requestBody of type {} (only objects are flattened)",
                schema.kind
            ));
            return Ok(None);
        }
        schema
            .check_consistency(&format!("{at} body"))
            .map_err(OasError::MalformedDocument)?;
        Ok(Some(schema))
    }

    fn schema(&mut self, raw: &'a Value, at: &str, depth: usize) -> Result<Schema, OasError> {
        if depth > MAX_REF_DEPTH {
            self.warn(format!("{at}: schema nesting too deep; truncated to empty object"));
            return Ok(Schema::new(SchemaKind::Object));
        }
        let Some(raw) = self.deref(raw, at) else {
            return Ok(Schema::string());
        };
        let Some(obj) = raw.as_object() else {
            return Err(OasError::MalformedDocument(format!("{at}: schema is not a mapping")));
        };
        for key in ["oneOf", "anyOf", "not"] {
            if obj.contains_key(key) {
                self.warn(format!("{at}: dropped `{key}`"));
            }
        }

        let mut merged_props: IndexMap<String, Property> = IndexMap::new();
        let mut merged: Option<Schema> = None;
        if let Some(all) = obj.get("allOf").and_then(Value::as_array) {
            for (i, part) in all.iter().enumerate() {
                let s = self.schema(part, &format!("{at}.allOf[{i}]"), depth + 1)?;
                merged_props.extend(s.properties.clone());
                merged = Some(match merged {
                    None => s,
                    Some(prev) => merge_schema(prev, s),
                });
            }
        }

        let declared = match obj.get("type") {
            Some(Value::String(t)) => SchemaKind::parse(t),
            Some(Value::Array(ts)) => ts
                .iter()
                .filter_map(Value::as_str)
                .find(|t| *t != "null")
                .and_then(SchemaKind::parse),
            _ => None,
        };
        let kind = declared
            .or(merged.as_ref().map(|m| m.kind))
            .unwrap_or_else(|| infer_kind(obj));

        let mut schema = merged.unwrap_or_else(|| Schema::new(kind));
        schema.kind = kind;
        let num = |k: &str| obj.get(k).and_then(Value::as_f64);
        let count = |k: &str| obj.get(k).and_then(Value::as_u64);
        if let Some(f) = obj.get("format").and_then(Value::as_str) {
            schema.format = Some(f.to_string());
        }
        schema.minimum = num("minimum").or(schema.minimum);
        schema.maximum = num("maximum").or(schema.maximum);
        schema.min_length = count("minLength").or(schema.min_length);
        schema.max_length = count("maxLength").or(schema.max_length);
        schema.min_items = count("minItems").or(schema.min_items);
        schema.max_items = count("maxItems").or(schema.max_items);
        if let Some(values) = obj.get("enum").and_then(Value::as_array) {
            let (ok, bad): (Vec<_>, Vec<_>) =
                values.iter().cloned().partition(|v| kind.admits(v));
            if !bad.is_empty() {
                self.warn(format!("{at}: dropped {} enum value(s) not of type {kind}", bad.len()));
            }
            if !ok.is_empty() {
                schema.enum_values = Some(ok);
            }
        }
        if let Some(d) = obj.get("default") {
            if kind.admits(d) {
                schema.default_value = Some(d.clone());
            } else {
                self.warn(format!("{at}: dropped default {d} not of type {kind}"));
            }
        }
        if let Some(e) = obj.get("example") {
            push_unique(&mut schema.example_values, e.clone());
        }
        if let Some(es) = obj.get("examples").and_then(Value::as_array) {
            for e in es {
                push_unique(&mut schema.example_values, e.clone());
            }
        }
        schema.example_values.retain(|v| kind.admits(v));

        if kind == SchemaKind::Array {
            schema.items = Some(Box::new(match obj.get("items") {
                Some(items) => self.schema(items, &format!("{at}[]"), depth + 1)?,
                None => schema.items.map(|b| *b).unwrap_or_else(Schema::string),
            }));
        }
        if kind == SchemaKind::Object {
            let required: Vec<&str> = obj
                .get("required")
                .and_then(Value::as_array)
                .map(|r| r.iter().filter_map(Value::as_str).collect())
                .unwrap_or_default();
            let mut props = merged_props;
            if let Some(p) = obj.get("properties").and_then(Value::as_object) {
                for (name, sub) in p {
                    let s = self.schema(sub, &format!("{at}.{name}"), depth + 1)?;
                    props.insert(
                        name.clone(),
                        Property {
                            schema: s,
                            required: false,
                        },
                    );
                }
            }
            for name in required {
                if let Some(p) = props.get_mut(name) {
                    p.required = true;
                }
            }
            if obj.contains_key("additionalProperties") {
                self.warn(format!("{at}: dropped `additionalProperties`"));
            }
            schema.properties = props;
        }
        Ok(schema)
    }

    /// Follows local `$ref` chains. Returns `None` (with a warning) for
    /// remote or dangling references.
    fn deref(&mut self, value: &'a Value, at: &str) -> Option<&'a Value> {
        match self.follow(value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.warn(format!("{at}: {msg}"));
                None
            }
        }
    }

    fn deref_quiet(&self, value: &'a Value) -> Option<&'a Value> {
        self.follow(value).ok()
    }

    fn follow(&self, mut value: &'a Value) -> Result<&'a Value, String> {
        for _ in 0..MAX_REF_DEPTH {
            let Some(r) = value.get("$ref").and_then(Value::as_str) else {
                return Ok(value);
            };
            let Some(pointer) = r.strip_prefix('#') else {
                return Err(format!("dropped non-local $ref {r}"));
            };
            value = self
                .root
                .pointer(pointer)
                .ok_or_else(|| format!("dropped dangling $ref {r}"))?;
        }
        Err("dropped circular $ref chain".into())
    }
}

fn infer_kind(obj: &Map<String, Value>) -> SchemaKind {
    if obj.contains_key("properties") {
        SchemaKind::Object
    } else if obj.contains_key("items") {
        SchemaKind::Array
    } else if obj.contains_key("minimum") || obj.contains_key("maximum") {
        SchemaKind::Number
    } else if let Some(first) = obj
        .get("enum")
        .and_then(Value::as_array)
        .and_then(|e| e.first())
    {
        match first {
            Value::Bool(_) => SchemaKind::Boolean,
            Value::Number(n) if n.is_f64() => SchemaKind::Number,
            Value::Number(_) => SchemaKind::Integer,
            _ => SchemaKind::String,
        }
    } else {
        SchemaKind::String
    }
}

fn merge_schema(a: Schema, b: Schema) -> Schema {
    let mut properties = a.properties;
    properties.extend(b.properties);
    Schema {
        kind: a.kind,
        format: a.format.or(b.format),
        minimum: a.minimum.or(b.minimum),
        maximum: a.maximum.or(b.maximum),
        min_length: a.min_length.or(b.min_length),
        max_length: a.max_length.or(b.max_length),
        min_items: a.min_items.or(b.min_items),
        max_items: a.max_items.or(b.max_items),
        enum_values: a.enum_values.or(b.enum_values),
        default_value: a.default_value.or(b.default_value),
        example_values: [a.example_values, b.example_values].concat(),
        items: a.items.or(b.items),
        properties,
    }
}

fn push_unique(values: &mut Vec<Value>, v: Value) {
    if !values.contains(&v) {
        values.push(v);
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
