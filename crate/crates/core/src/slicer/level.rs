use crate::error::{Error, Result};
use crate::frontend::TestInventory;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Assertion,
    Method,
    Class,
}

impl Level {
    /// Entity id prefix and manifest letter.
    pub fn letter(self) -> char {
        match self {
            Level::Assertion => 'A',
            Level::Method => 'M',
            Level::Class => 'C',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LevelReason {
    Sliceable,
    NoAssertions,
    Conditionals,
    ExpectedException,
    OutOfScopeCall,
    Parameterized,
    Inheritance,
    CallsOtherTests,
    /// Fine-grained selection switched off by the caller.
    Forced,
}

impl LevelReason {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelReason::Sliceable => "sliceable",
            LevelReason::NoAssertions => "noAssertions",
            LevelReason::Conditionals => "conditionals",
            LevelReason::ExpectedException => "expectedException",
            LevelReason::OutOfScopeCall => "outOfScopeCall",
            LevelReason::Parameterized => "parameterized",
            LevelReason::Inheritance => "inheritance",
            LevelReason::CallsOtherTests => "callsOtherTests",
            LevelReason::Forced => "forced",
        }
    }

    pub fn parse(s: &str) -> Option<LevelReason> {
        ALL_REASONS.into_iter().find(|r| r.as_str() == s)
    }
}

const ALL_REASONS: [LevelReason; 9] = [
    LevelReason::Sliceable,
    LevelReason::NoAssertions,
    LevelReason::Conditionals,
    LevelReason::ExpectedException,
    LevelReason::OutOfScopeCall,
    LevelReason::Parameterized,
    LevelReason::Inheritance,
    LevelReason::CallsOtherTests,
    LevelReason::Forced,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SelectionLevel {
    pub level: Level,
    pub reason: LevelReason,
}

impl SelectionLevel {
    pub const fn new(level: Level, reason: LevelReason) -> SelectionLevel {
        SelectionLevel { level, reason }
    }
}

impl fmt::Display for SelectionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Assertion => "assertionLevel",
            Level::Method => "methodLevel",
            Level::Class => "classLevel",
        };
        write!(f, "{level}({})", self.reason.as_str())
    }
}

/// Level of one test method, or with `method = None` of the class as a whole:
/// class level when a class feature applies, otherwise assertion level meaning
/// the per-method levels govern.
pub fn classify_selectability(
    inventory: &TestInventory,
    class: &str,
    method: Option<&str>,
) -> Result<SelectionLevel> {
    let info = inventory
        .class(class)
        .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
    let f = info.features;
    let class_reason = if f.parameterized {
        Some(LevelReason::Parameterized)
    } else if f.uses_inheritance {
        Some(LevelReason::Inheritance)
    } else if f.calls_other_tests {
        Some(LevelReason::CallsOtherTests)
    } else {
        None
    };
    if let Some(reason) = class_reason {
        if let Some(key) = method {
            let known = info.method(key).is_some()
                || info.inherited_tests.iter().any(|s| s.key() == key);
            if !known {
                return Err(Error::UnknownMethod(format!("{class}.{key}")));
            }
        }
        return Ok(SelectionLevel::new(Level::Class, reason));
    }
    let Some(key) = method else {
        return Ok(SelectionLevel::new(Level::Assertion, LevelReason::Sliceable));
    };
    let m = info
        .method(key)
        .ok_or_else(|| Error::UnknownMethod(format!("{class}.{key}")))?;
    let reason = if m.expects_exception.is_some() {
        LevelReason::ExpectedException
    } else if m.has_conditionals {
        LevelReason::Conditionals
    } else if m.out_of_scope_call {
        LevelReason::OutOfScopeCall
    } else if m.assertion_count == 0 {
        LevelReason::NoAssertions
    } else {
        return Ok(SelectionLevel::new(Level::Assertion, LevelReason::Sliceable));
    };
    Ok(SelectionLevel::new(Level::Method, reason))
}

/// Levels of one test class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLevels {
    pub class: SelectionLevel,
    /// Declared `@Test` methods by key; empty for class-level classes.
    pub methods: BTreeMap<String, SelectionLevel>,
}

impl ClassLevels {
    pub fn is_class_level(&self) -> bool {
        self.class.level == Level::Class
    }

    pub fn method(&self, key: &str) -> Option<SelectionLevel> {
        if self.is_class_level() {
            Some(self.class)
        } else {
            self.methods.get(key).copied()
        }
    }
}

/// Levels for every test class; `method_level_only` downgrades every
/// assertion-level method to method level.
pub fn compute_levels(inventory: &TestInventory, method_level_only: bool) -> BTreeMap<String, ClassLevels> {
    let mut out = BTreeMap::new();
    for info in &inventory.classes {
        let class = classify_selectability(inventory, &info.fq_name, None)
            .expect("class taken from the inventory");
        let mut methods = BTreeMap::new();
        if class.level != Level::Class {
            for m in &info.test_methods {
                let key = m.signature.key();
                let mut level = classify_selectability(inventory, &info.fq_name, Some(&key))
                    .expect("method taken from the inventory");
                if method_level_only && level.level == Level::Assertion {
                    level = SelectionLevel::new(Level::Method, LevelReason::Forced);
                }
                methods.insert(key, level);
            }
        }
        out.insert(info.fq_name.clone(), ClassLevels { class, methods });
    }
    out
}
