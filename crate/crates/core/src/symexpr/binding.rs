use std::collections::BTreeMap;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("symbol `{0}` is already bound")]
    Duplicate(String),
    #[error("value bound to `{0}` is not finite")]
    NonFinite(String),
}

/// Symbol name to complex value table, ordered by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Binding<T: Scalar> {
    values: BTreeMap<String, Complex<T>>,
}

impl<T: Scalar> Binding<T> {
    pub fn new() -> Self {
        Binding { values: BTreeMap::new() }
    }

    /// Binds a new symbol; rebinding or a non-finite value is an error.
    pub fn insert(&mut self, name: &str, value: Complex<T>) -> Result<(), BindingError> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(BindingError::NonFinite(name.to_string()));
        }
        if self.values.contains_key(name) {
            return Err(BindingError::Duplicate(name.to_string()));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn insert_real(&mut self, name: &str, value: T) -> Result<(), BindingError> {
        self.insert(name, Complex::new(value, T::zero()))
    }

    /// Overwrites (or adds) a value. Panics on non-finite input.
    pub fn set(&mut self, name: &str, value: T) {
        assert!(value.is_finite(), "non-finite value for `{name}`");
        self.values.insert(name.to_string(), Complex::new(value, T::zero()));
    }

    pub fn with(mut self, name: &str, value: T) -> Self {
        self.set(name, value);
        self
    }

    pub fn from_real_pairs<'a, I: IntoIterator<Item = (&'a str, T)>>(pairs: I) -> Result<Self, BindingError> {
        let mut b = Binding::new();
        for (k, v) in pairs {
            b.insert_real(k, v)?;
        }
        Ok(b)
    }

    pub fn get(&self, name: &str) -> Option<Complex<T>> {
        self.values.get(name).copied()
    }

    pub fn get_real(&self, name: &str) -> Option<T> {
        self.get(name).map(|c| c.re)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Complex<T>> {
        self.values.remove(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Complex<T>)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &Binding<T>) -> Binding<T> {
        let mut out = self.clone();
        out.values.extend(other.values.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }
}
