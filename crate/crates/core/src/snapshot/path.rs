use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Case folding used for every key and value name comparison.
pub fn fold_case(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

/// Compares two names the way the registry does (case-insensitive).
pub fn names_equal(a: &str, b: &str) -> bool {
    a == b || fold_case(a) == fold_case(b)
}

/// Total order on names: case-folded first, original bytes as tie-break.
pub fn cmp_names(a: &str, b: &str) -> Ordering {
    fold_case(a).cmp(&fold_case(b)).then_with(|| a.cmp(b))
}

/// Returns the first character that may not appear in a key or value name.
pub fn illegal_name_char(name: &str) -> Option<char> {
    name.chars().find(|c| *c == '\\' || c.is_control())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootAlias {
    #[serde(rename = "HKCU")]
    Hkcu,
    #[serde(rename = "HKLM")]
    Hklm,
}

impl RootAlias {
    pub fn as_str(self) -> &'static str {
        match self {
            RootAlias::Hkcu => "HKCU",
            RootAlias::Hklm => "HKLM",
        }
    }

    fn from_segment(s: &str) -> Option<Self> {
        match fold_case(s).as_str() {
            "hkcu" | "hkey_current_user" => Some(RootAlias::Hkcu),
            "hklm" | "hkey_local_machine" => Some(RootAlias::Hklm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("empty segment in registry path {0:?}")]
    EmptySegment(String),
    #[error("illegal character {ch:?} in registry path segment {segment:?}")]
    IllegalCharacter { segment: String, ch: char },
}

/// Full path of a key, hive-relative unless a root alias is present.
///
/// Equality, hashing and ordering are case-insensitive over the segments;
/// the stored segments keep their original case for display.
#[derive(Debug, Clone, Default)]
pub struct RegistryPath {
    segments: Vec<String>,
    root_alias: Option<RootAlias>,
}

impl RegistryPath {
    pub fn root() -> Self {
        Self::default()
    }

    /// Builds a hive-relative path from already-validated segments.
    pub fn from_segments<I, S>(segments: I) -> Result<Self, PathError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut path = Self::root();
        for s in segments {
            path = path.try_child(s)?;
        }
        Ok(path)
    }

    /// Parses `\Software\Adobe`, `Software\Adobe` or `HKCU\Software\Adobe`.
    ///
    /// A leading `HKCU`/`HKLM` (or the long `HKEY_*` forms) becomes the root
    /// alias. One leading and one trailing backslash are tolerated.
    pub fn parse(text: &str) -> Result<Self, PathError> {
        let mut rest = text.strip_prefix('\\').unwrap_or(text);
        rest = rest.strip_suffix('\\').unwrap_or(rest);
        if rest.is_empty() {
            return Ok(Self::root());
        }
        let mut parts: Vec<&str> = rest.split('\\').collect();
        let mut root_alias = None;
        if !text.starts_with('\\') {
            if let Some(alias) = RootAlias::from_segment(parts[0]) {
                root_alias = Some(alias);
                parts.remove(0);
            }
        }
        let mut path = Self::from_segments(parts).map_err(|e| match e {
            PathError::EmptySegment(_) => PathError::EmptySegment(text.to_string()),
            other => other,
        })?;
        path.root_alias = root_alias;
        Ok(path)
    }

    pub fn try_child(&self, name: impl Into<String>) -> Result<Self, PathError> {
        let name = name.into();
        if name.is_empty() {
            return Err(PathError::EmptySegment(self.to_string()));
        }
        if let Some(ch) = illegal_name_char(&name) {
            return Err(PathError::IllegalCharacter { segment: name, ch });
        }
        let mut segments = self.segments.clone();
        segments.push(name);
        Ok(Self {
            segments,
            root_alias: self.root_alias,
        })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn root_alias(&self) -> Option<RootAlias> {
        self.root_alias
    }

    pub fn with_root_alias(mut self, alias: Option<RootAlias>) -> Self {
        self.root_alias = alias;
        self
    }

    /// The same segments with the root alias dropped.
    pub fn hive_relative(&self) -> Self {
        Self {
            segments: self.segments.clone(),
            root_alias: None,
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.segments.last().map(String::as_str)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.segments.is_empty() {
            return None;
        }
        Some(Self {
            segments: self.segments[..self.segments.len() - 1].to_vec(),
            root_alias: self.root_alias,
        })
    }

    /// First `n` segments (alias kept).
    pub fn truncate(&self, n: usize) -> Self {
        Self {
            segments: self.segments[..n.min(self.segments.len())].to_vec(),
            root_alias: self.root_alias,
        }
    }

    /// Segment-wise, case-insensitive prefix test that ignores root aliases.
    /// A path is a prefix of itself.
    pub fn is_prefix_of(&self, other: &RegistryPath) -> bool {
        self.segments.len() <= other.segments.len()
            && self
                .segments
                .iter()
                .zip(&other.segments)
                .all(|(a, b)| names_equal(a, b))
    }

    /// True when `self` sits exactly one level below `parent` (aliases ignored).
    pub fn is_direct_child_of(&self, parent: &RegistryPath) -> bool {
        self.segments.len() == parent.segments.len() + 1 && parent.is_prefix_of(self)
    }

    /// Equality that ignores the root alias.
    pub fn same_key_as(&self, other: &RegistryPath) -> bool {
        self.segments.len() == other.segments.len() && self.is_prefix_of(other)
    }

    /// Segments joined with backslashes and no leading separator, as used in
    /// snapshot files.
    pub fn to_relative_string(&self) -> String {
        self.segments.join("\\")
    }

    fn folded(&self) -> Vec<String> {
        self.segments.iter().map(|s| fold_case(s)).collect()
    }
}

impl PartialEq for RegistryPath {
    fn eq(&self, other: &Self) -> bool {
        self.root_alias == other.root_alias && self.same_key_as(other)
    }
}

impl Eq for RegistryPath {}

impl Hash for RegistryPath {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.root_alias.hash(state);
        self.folded().hash(state);
    }
}

impl Ord for RegistryPath {
    /// Canonical order: depth-first, siblings by case-folded name.
    fn cmp(&self, other: &Self) -> Ordering {
        self.root_alias
            .cmp(&other.root_alias)
            .then_with(|| self.folded().cmp(&other.folded()))
    }
}

impl PartialOrd for RegistryPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RegistryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(alias) = self.root_alias {
            f.write_str(alias.as_str())?;
            if self.segments.is_empty() {
                return Ok(());
            }
        }
        if self.segments.is_empty() {
            return f.write_str("\\");
        }
        for s in &self.segments {
            write!(f, "\\{s}")?;
        }
        Ok(())
    }
}

impl FromStr for RegistryPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for RegistryPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegistryPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}
