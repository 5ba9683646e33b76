use std::fmt;

/// Dense index of a user in a [`UserTable`].
///
/// Tables are sorted, so comparing two ids compares the underlying
/// identifiers lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Sorted, deduplicated set of hashed user identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserTable {
    names: Vec<String>,
}

impl UserTable {
    /// Builds a table from arbitrary names; duplicates collapse.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort_unstable();
        names.dedup();
        Self { names }
    }

    pub(crate) fn from_sorted_unchecked(names: Vec<String>) -> Self {
        debug_assert!(names.windows(2).all(|w| w[0] < w[1]));
        Self { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: UserId) -> &str {
        &self.names[id.index()]
    }

    pub fn get(&self, id: UserId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn lookup(&self, name: &str) -> Option<UserId> {
        self.names
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .ok()
            .map(|i| UserId(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, &str)> + '_ {
        self.names.iter().enumerate().map(|(i, n)| (UserId(i as u32), n.as_str()))
    }
}

/// Dense membership mask over a user table, used on hot per-record paths.
#[derive(Debug, Clone)]
pub(crate) struct UserMask(Vec<bool>);

impl UserMask {
    pub(crate) fn new<'a>(len: usize, members: impl IntoIterator<Item = &'a UserId>) -> Self {
        let mut mask = vec![false; len];
        for u in members {
            if let Some(slot) = mask.get_mut(u.index()) {
                *slot = true;
            }
        }
        Self(mask)
    }

    #[inline]
    pub(crate) fn contains(&self, u: UserId) -> bool {
        self.0.get(u.index()).copied().unwrap_or(false)
    }
}
