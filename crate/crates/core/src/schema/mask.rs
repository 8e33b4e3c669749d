//! Component masks for task-level instructions.
//!
//! A task-level instruction is built from four optional components:
//! Definition, Positive Examples, Negative Examples, and Explanations
//! attached to those examples. A [`ComponentMask`] records which of them an
//! instruction format uses, e.g. `DP` or `DPNE`.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One component of a task-level instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Definition,
    Positives,
    Negatives,
    Explanations,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Definition,
        Component::Positives,
        Component::Negatives,
        Component::Explanations,
    ];

    pub fn letter(self) -> char {
        match self {
            Component::Definition => 'D',
            Component::Positives => 'P',
            Component::Negatives => 'N',
            Component::Explanations => 'E',
        }
    }

    /// Human-readable name used in diagnostics.
    pub fn name(self) -> &'static str {
        match self {
            Component::Definition => "Definition",
            Component::Positives => "Positive Examples",
            Component::Negatives => "Negative Examples",
            Component::Explanations => "Explanations",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of active components. Always non-empty, and explanations are only
/// active alongside at least one kind of example to attach them to.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComponentMask {
    d: bool,
    p: bool,
    n: bool,
    e: bool,
}

impl ComponentMask {
    pub const DP: ComponentMask = ComponentMask { d: true, p: true, n: false, e: false };
    pub const DPN: ComponentMask = ComponentMask { d: true, p: true, n: true, e: false };
    pub const DPE: ComponentMask = ComponentMask { d: true, p: true, n: false, e: true };
    pub const DPNE: ComponentMask = ComponentMask { d: true, p: true, n: true, e: true };

    pub fn new(d: bool, p: bool, n: bool, e: bool) -> Result<Self> {
        let mask = ComponentMask { d, p, n, e };
        mask.check()?;
        Ok(mask)
    }

    fn check(&self) -> Result<()> {
        if !(self.d || self.p || self.n || self.e) {
            return Err(Error::validation("component mask must name at least one component"));
        }
        if self.e && !(self.p || self.n) {
            return Err(Error::validation(
                "component mask with Explanations requires Positive or Negative Examples to attach them to",
            ));
        }
        Ok(())
    }

    pub fn has_d(&self) -> bool {
        self.d
    }

    pub fn has_p(&self) -> bool {
        self.p
    }

    pub fn has_n(&self) -> bool {
        self.n
    }

    pub fn has_e(&self) -> bool {
        self.e
    }

    pub fn has(&self, component: Component) -> bool {
        match component {
            Component::Definition => self.d,
            Component::Positives => self.p,
            Component::Negatives => self.n,
            Component::Explanations => self.e,
        }
    }

    /// Active components in canonical D, P, N, E order.
    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        Component::ALL.into_iter().filter(|c| self.has(*c))
    }

    /// Canonical code such as `"DPN"`, letters always in D, P, N, E order.
    pub fn code(&self) -> String {
        self.components().map(Component::letter).collect()
    }

    pub fn is_superset_of(&self, other: &ComponentMask) -> bool {
        (!other.d || self.d) && (!other.p || self.p) && (!other.n || self.n) && (!other.e || self.e)
    }

    /// Every mask that satisfies the invariants, in canonical code order.
    pub fn all_valid() -> Vec<ComponentMask> {
        let mut masks = Vec::new();
        for bits in 1u8..16 {
            let mask = ComponentMask {
                d: bits & 1 != 0,
                p: bits & 2 != 0,
                n: bits & 4 != 0,
                e: bits & 8 != 0,
            };
            if mask.check().is_ok() {
                masks.push(mask);
            }
        }
        masks.sort_by_key(|m| m.code());
        masks
    }
}

/// Parse a mask code such as `"dpn"`. Case-insensitive; letters may appear
/// in any order but not more than once.
pub fn parse_component_mask(code: &str) -> Result<ComponentMask> {
    if code.trim().is_empty() {
        return Err(Error::validation("empty component mask code"));
    }
    let (mut d, mut p, mut n, mut e) = (false, false, false, false);
    for ch in code.trim().chars() {
        let slot = match ch.to_ascii_uppercase() {
            'D' => &mut d,
            'P' => &mut p,
            'N' => &mut n,
            'E' => &mut e,
            other => {
                return Err(Error::validation(format!(
                    "unknown component letter {other:?} in mask code {code:?} (expected D, P, N, E)"
                )))
            }
        };
        if *slot {
            return Err(Error::validation(format!(
                "component letter {:?} repeated in mask code {code:?}",
                ch.to_ascii_uppercase()
            )));
        }
        *slot = true;
    }
    ComponentMask::new(d, p, n, e)
}

impl fmt::Display for ComponentMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl fmt::Debug for ComponentMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComponentMask({})", self.code())
    }
}

impl Serialize for ComponentMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for ComponentMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        parse_component_mask(&code).map_err(D::Error::custom)
    }
}
