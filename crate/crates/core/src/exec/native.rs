//! Name → host function lookup table shared by every execution strategy.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::Value;
use crate::ast::{TypeTag, GP_MAIN};

pub type NativeFn = Arc<dyn Fn(&[Value]) -> Value + Send + Sync>;

pub struct NativeEntry {
    name: String,
    params: Vec<TypeTag>,
    ret: TypeTag,
    func: NativeFn,
}

impl NativeEntry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[TypeTag] {
        &self.params
    }

    pub fn ret(&self) -> TypeTag {
        self.ret
    }

    /// Calls the host function. Arguments must already carry the declared
    /// tags; the result is coerced to the declared return tag.
    pub fn invoke(&self, args: &[Value]) -> Value {
        let out = (self.func)(args);
        match (self.ret, out) {
            (TypeTag::Int, Value::Double(d)) => Value::Int(d as i64),
            (TypeTag::Double, Value::Int(i)) => Value::Double(i as f64),
            (_, v) => v,
        }
    }
}

impl fmt::Debug for NativeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NativeEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("ret", &self.ret)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("native `{0}` is already registered")]
    DuplicateNative(String),
    #[error("invalid native signature for `{name}`: {reason}")]
    InvalidSignature { name: String, reason: String },
}

/// Registry of host functions callable from programs. Cloning is cheap; the
/// table is shared and copied only when a clone registers a new entry.
#[derive(Clone, Default)]
pub struct NativeRegistry {
    inner: Arc<Table>,
}

#[derive(Clone, Default)]
struct Table {
    entries: Vec<Arc<NativeEntry>>,
    by_name: HashMap<String, usize>,
}

impl NativeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry preloaded with a few `double` math functions:
    /// `sqrt_d`, `sin_d`, `cos_d`, `exp_d`, `log_d`, `abs_d` and `pow_d`.
    pub fn math() -> Self {
        let mut r = NativeRegistry::new();
        type Unary = (&'static str, fn(f64) -> f64);
        let unary: [Unary; 6] = [
            ("sqrt_d", f64::sqrt),
            ("sin_d", f64::sin),
            ("cos_d", f64::cos),
            ("exp_d", f64::exp),
            ("log_d", f64::ln),
            ("abs_d", f64::abs),
        ];
        for (name, f) in unary {
            r.register_native(name, &[TypeTag::Double], TypeTag::Double, move |args| {
                Value::Double(f(args[0].as_f64()))
            })
            .expect("builtin names are distinct");
        }
        r.register_native("pow_d", &[TypeTag::Double, TypeTag::Double], TypeTag::Double, |args| {
            Value::Double(args[0].as_f64().powf(args[1].as_f64()))
        })
        .expect("builtin names are distinct");
        r
    }

    pub fn register_native(
        &mut self,
        name: &str,
        params: &[TypeTag],
        ret: TypeTag,
        func: impl Fn(&[Value]) -> Value + Send + Sync + 'static,
    ) -> Result<&mut Self, RegistryError> {
        if !is_identifier(name) || matches!(name, "int" | "double" | "return" | GP_MAIN) {
            return Err(RegistryError::InvalidSignature {
                name: name.to_string(),
                reason: "name must be a non-reserved identifier".into(),
            });
        }
        if name.starts_with("__") {
            return Err(RegistryError::InvalidSignature {
                name: name.to_string(),
                reason: "names starting with `__` are reserved".into(),
            });
        }
        if self.inner.by_name.contains_key(name) {
            return Err(RegistryError::DuplicateNative(name.to_string()));
        }
        let table = Arc::make_mut(&mut self.inner);
        table.by_name.insert(name.to_string(), table.entries.len());
        table.entries.push(Arc::new(NativeEntry {
            name: name.to_string(),
            params: params.to_vec(),
            ret,
            func: Arc::new(func),
        }));
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<NativeEntry>> {
        self.inner.by_name.get(name).map(|&i| &self.inner.entries[i])
    }

    pub fn len(&self) -> usize {
        self.inner.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.inner.entries.iter().map(|e| e.name())
    }
}

impl fmt::Debug for NativeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.inner.entries.iter()).finish()
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
