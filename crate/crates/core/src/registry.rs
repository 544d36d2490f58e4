//! Name-keyed registries of interchangeable algorithm implementations.

use std::fmt;
use std::sync::Arc;

/// Ordered collection of named strategy objects behind a common trait.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Arc<T>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub known: Vec<&'static str>,
}

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown {} '{}' (known: {})",
            self.kind,
            self.name,
            self.known.join(", ")
        )
    }
}

impl std::error::Error for UnknownStrategy {}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds or replaces the entry under `name`.
    pub fn register(&mut self, name: &'static str, item: Arc<T>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = item;
        } else {
            self.entries.push((name, item));
        }
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>, UnknownStrategy> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| Arc::clone(v))
            .ok_or_else(|| UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Speak {
        fn word(&self) -> &'static str;
    }
    struct A;
    struct B;
    impl Speak for A {
        fn word(&self) -> &'static str {
            "a"
        }
    }
    impl Speak for B {
        fn word(&self) -> &'static str {
            "b"
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut r: Registry<dyn Speak> = Registry::new("speaker");
        r.register("x", Arc::new(A)).register("y", Arc::new(B));
        assert_eq!(r.get("y").unwrap().word(), "b");
        r.register("y", Arc::new(A));
        assert_eq!(r.get("y").unwrap().word(), "a");
        assert_eq!(r.names(), vec!["x", "y"]);
        let e = r.get("z").err().unwrap();
        assert!(e.to_string().contains("unknown speaker 'z'"));
    }
}
