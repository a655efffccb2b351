use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A protocol client. Clients are positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClientId(u32);

impl ClientId {
    pub fn new(id: u32) -> Option<Self> {
        (id > 0).then_some(ClientId(id))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for tests and builders; panics on 0.
pub fn client(id: u32) -> ClientId {
    ClientId::new(id).expect("client ids are positive")
}

pub type Federation = BTreeSet<ClientId>;

pub fn federation(ids: impl IntoIterator<Item = u32>) -> Federation {
    ids.into_iter().map(client).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Secret,
    Flip,
    Mesg,
    Reveal,
    Out,
    /// Synthetic `<m[w]>`: the sum of both shares of message `w`. Only
    /// ever a pmf column, never a protocol variable.
    GlobalView,
}

impl VarKind {
    pub fn prefix(self) -> &'static str {
        match self {
            VarKind::Secret => "s",
            VarKind::Flip => "r",
            VarKind::Mesg => "m",
            VarKind::Reveal => "p",
            VarKind::Out => "out",
            VarKind::GlobalView => "<m",
        }
    }
}

/// A protocol variable with its owning client.
///
/// `Out` variables carry an empty name, `Reveal` and `GlobalView`
/// variables carry no owner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    kind: VarKind,
    name: String,
    owner: Option<ClientId>,
}

impl Var {
    pub fn secret(name: impl Into<String>, owner: ClientId) -> Var {
        Var {
            kind: VarKind::Secret,
            name: name.into(),
            owner: Some(owner),
        }
    }

    pub fn flip(name: impl Into<String>, owner: ClientId) -> Var {
        Var {
            kind: VarKind::Flip,
            name: name.into(),
            owner: Some(owner),
        }
    }

    pub fn mesg(name: impl Into<String>, owner: ClientId) -> Var {
        Var {
            kind: VarKind::Mesg,
            name: name.into(),
            owner: Some(owner),
        }
    }

    pub fn reveal(name: impl Into<String>) -> Var {
        Var {
            kind: VarKind::Reveal,
            name: name.into(),
            owner: None,
        }
    }

    pub fn out(owner: ClientId) -> Var {
        Var {
            kind: VarKind::Out,
            name: String::new(),
            owner: Some(owner),
        }
    }

    pub fn global_view(name: impl Into<String>) -> Var {
        Var {
            kind: VarKind::GlobalView,
            name: name.into(),
            owner: None,
        }
    }

    /// The variable an expression reference `kind[name]` denotes when
    /// computed on `client`. Reveals are federation-global.
    pub fn resolve(kind: VarKind, name: &str, client: ClientId) -> Var {
        match kind {
            VarKind::Reveal => Var::reveal(name),
            VarKind::GlobalView => Var::global_view(name),
            VarKind::Out => Var::out(client),
            _ => Var {
                kind,
                name: name.to_string(),
                owner: Some(client),
            },
        }
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn owner(&self) -> Option<ClientId> {
        self.owner
    }

    pub fn is_owned_by(&self, clients: &BTreeSet<ClientId>) -> bool {
        self.owner.is_some_and(|o| clients.contains(&o))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.owner) {
            (VarKind::Out, Some(o)) => write!(f, "out@{o}"),
            (VarKind::Reveal, _) => write!(f, "p[{}]", self.name),
            (VarKind::GlobalView, _) => write!(f, "<m[{}]>", self.name),
            (kind, Some(o)) => write!(f, "{}[{}]@{}", kind.prefix(), self.name, o),
            (kind, None) => write!(f, "{}[{}]", kind.prefix(), self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed variable `{0}`")]
pub struct VarParseError(pub String);

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for Var {
    type Err = VarParseError;

    /// Accepts the display forms `s[x]@1`, `r[x]@1`, `m[x]@1`, `p[x]`,
    /// `out@1` and `<m[x]>`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || VarParseError(text.to_string());
        let s = text.trim();
        let parse_client = |c: &str| -> Result<ClientId, VarParseError> {
            c.parse::<u32>()
                .ok()
                .and_then(ClientId::new)
                .ok_or_else(err)
        };
        if let Some(rest) = s.strip_prefix("out@") {
            return Ok(Var::out(parse_client(rest)?));
        }
        if let Some(inner) = s.strip_prefix("<m[").and_then(|r| r.strip_suffix("]>")) {
            return valid_name(inner)
                .then(|| Var::global_view(inner))
                .ok_or_else(err);
        }
        let (head, rest) = s.split_once('[').ok_or_else(err)?;
        let (name, tail) = rest.split_once(']').ok_or_else(err)?;
        if !valid_name(name) {
            return Err(err());
        }
        let kind = match head {
            "s" => VarKind::Secret,
            "r" => VarKind::Flip,
            "m" => VarKind::Mesg,
            "p" => VarKind::Reveal,
            _ => return Err(err()),
        };
        if kind == VarKind::Reveal {
            return tail.is_empty().then(|| Var::reveal(name)).ok_or_else(err);
        }
        let owner = parse_client(tail.strip_prefix('@').ok_or_else(err)?)?;
        Ok(Var::resolve(kind, name, owner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_agree() {
        let vars = [
            Var::secret("x", client(1)),
            Var::flip("local", client(3)),
            Var::mesg("s1", client(2)),
            Var::reveal("1"),
            Var::out(client(2)),
            Var::global_view("z"),
        ];
        let shown: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        assert_eq!(
            shown,
            ["s[x]@1", "r[local]@3", "m[s1]@2", "p[1]", "out@2", "<m[z]>"]
        );
        for v in vars {
            assert_eq!(v.to_string().parse::<Var>().unwrap(), v);
        }
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["s[x]", "p[x]@1", "q[x]@1", "m[]@1", "out@0", "m[a b]@1"] {
            assert!(bad.parse::<Var>().is_err(), "{bad}");
        }
    }
}
