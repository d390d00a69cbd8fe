use core::hash::BuildHasherDefault;

use rustc_hash::FxHasher;

pub(crate) type FxBuild = BuildHasherDefault<FxHasher>;
pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, FxBuild>;
pub(crate) type FxHashSet<K> = hashbrown::HashSet<K, FxBuild>;

pub(crate) fn map<K, V>() -> FxHashMap<K, V> {
    FxHashMap::with_hasher(FxBuild::default())
}

pub(crate) fn set<K>() -> FxHashSet<K> {
    FxHashSet::with_hasher(FxBuild::default())
}
