use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Column store with named numeric and categorical columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    numeric: BTreeMap<String, Vec<f64>>,
    categorical: BTreeMap<String, Vec<i64>>,
}

impl Dataset {
    pub fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            ..Self::default()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn add_numeric(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        self.check_len(name, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("column '{name}' row {i}: non-finite value {}", values[i])));
        }
        self.numeric.insert(name.to_string(), values);
        Ok(())
    }

    pub fn add_categorical(&mut self, name: &str, values: Vec<i64>) -> Result<()> {
        self.check_len(name, values.len())?;
        self.categorical.insert(name.to_string(), values);
        Ok(())
    }

    pub fn with_numeric(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.add_numeric(name, values)?;
        Ok(self)
    }

    pub fn with_categorical(mut self, name: &str, values: Vec<i64>) -> Result<Self> {
        self.add_categorical(name, values)?;
        Ok(self)
    }

    fn check_len(&self, name: &str, len: usize) -> Result<()> {
        if len != self.n_rows {
            return Err(Error::Data(format!(
                "column '{name}' has {len} rows, dataset has {}",
                self.n_rows
            )));
        }
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        self.numeric
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("unknown numeric column '{name}'")))
    }

    pub fn categorical(&self, name: &str) -> Result<&[i64]> {
        self.categorical
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("unknown categorical column '{name}'")))
    }

    /// Rows where `keep` is true.
    pub fn filter(&self, keep: &[bool]) -> Result<Dataset> {
        if keep.len() != self.n_rows {
            return Err(Error::Data("filter mask length mismatch".into()));
        }
        let pick_f = |v: &Vec<f64>| v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
        let pick_c = |v: &Vec<i64>| v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
        Ok(Dataset {
            n_rows: keep.iter().filter(|&&k| k).count(),
            numeric: self.numeric.iter().map(|(k, v)| (k.clone(), pick_f(v))).collect(),
            categorical: self.categorical.iter().map(|(k, v)| (k.clone(), pick_c(v))).collect(),
        })
    }

    /// Group index of the composite key formed by the named categorical
    /// columns. An empty key list yields a single group.
    pub fn group_index(&self, keys: &[String]) -> Result<GroupIndex> {
        if keys.is_empty() {
            return Ok(GroupIndex::single(self.n_rows));
        }
        let cols = keys
            .iter()
            .map(|k| self.categorical(k))
            .collect::<Result<Vec<_>>>()?;
        let composite: Vec<Vec<i64>> = (0..self.n_rows)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        Ok(GroupIndex::from_keys(&composite))
    }
}

/// Dense group ids `0..n_groups`, assigned in sorted key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    pub ids: Vec<usize>,
    pub n_groups: usize,
}

impl GroupIndex {
    pub fn single(n: usize) -> Self {
        Self {
            ids: vec![0; n],
            n_groups: usize::from(n > 0),
        }
    }

    pub fn from_keys<K: Ord + Clone>(keys: &[K]) -> Self {
        let mut map: BTreeMap<K, usize> = keys.iter().map(|k| (k.clone(), 0)).collect();
        for (i, v) in map.values_mut().enumerate() {
            *v = i;
        }
        Self {
            ids: keys.iter().map(|k| map[k]).collect(),
            n_groups: map.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Groups of `self` each lie within a single group of `outer`.
    pub fn nested_in(&self, outer: &GroupIndex) -> bool {
        let mut owner = vec![usize::MAX; self.n_groups];
        for (&g, &o) in self.ids.iter().zip(&outer.ids) {
            if owner[g] == usize::MAX {
                owner[g] = o;
            } else if owner[g] != o {
                return false;
            }
        }
        true
    }

    /// Intersection of two partitions.
    pub fn intersect(&self, other: &GroupIndex) -> GroupIndex {
        let pairs: Vec<(usize, usize)> = self.ids.iter().copied().zip(other.ids.iter().copied()).collect();
        GroupIndex::from_keys(&pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_keys_are_sorted_and_dense() {
        let ds = Dataset::new(4)
            .with_categorical("a", vec![2, 1, 2, 1])
            .unwrap()
            .with_categorical("b", vec![0, 0, 1, 0])
            .unwrap();
        let g = ds.group_index(&["a".into(), "b".into()]).unwrap();
        assert_eq!(g.n_groups, 3);
        assert_eq!(g.ids, vec![1, 0, 2, 0]);
        assert_eq!(ds.group_index(&[]).unwrap().n_groups, 1);
    }

    #[test]
    fn nesting_and_intersection() {
        let fine = GroupIndex::from_keys(&[0, 1, 2, 3]);
        let coarse = GroupIndex::from_keys(&[0, 0, 1, 1]);
        assert!(fine.nested_in(&coarse));
        assert!(!coarse.nested_in(&fine));
        assert_eq!(coarse.intersect(&fine).n_groups, 4);
    }

    #[test]
    fn column_validation() {
        let mut ds = Dataset::new(2);
        assert!(ds.add_numeric("x", vec![1.0]).is_err());
        assert!(ds.add_numeric("x", vec![1.0, f64::NAN]).is_err());
        assert!(ds.numeric("missing").is_err());
        ds.add_numeric("x", vec![1.0, 2.0]).unwrap();
        let f = ds.filter(&[false, true]).unwrap();
        assert_eq!(f.numeric("x").unwrap(), &[2.0]);
    }
}
