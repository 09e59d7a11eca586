//! Finite structures with two equivalence relations, given as partitions of
//! {1, ..., size}.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqStructure {
    pub size: usize,
    pub e1: Vec<Vec<usize>>,
    pub e2: Vec<Vec<usize>>,
}

fn check_partition(size: usize, p: &[Vec<usize>], name: &str) -> Result<(), ModelError> {
    let mut seen = vec![false; size + 1];
    for block in p {
        if block.is_empty() {
            return Err(ModelError::Format(format!("{name} has an empty class")));
        }
        for &x in block {
            if x == 0 || x > size {
                return Err(ModelError::Format(format!("{name} mentions {x} outside 1..={size}")));
            }
            if seen[x] {
                return Err(ModelError::Format(format!("{name} lists {x} twice")));
            }
            seen[x] = true;
        }
    }
    if let Some(x) = (1..=size).find(|&x| !seen[x]) {
        return Err(ModelError::Format(format!("{name} misses {x}")));
    }
    Ok(())
}

impl EqStructure {
    pub fn new(size: usize, e1: Vec<Vec<usize>>, e2: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let s = EqStructure { size, e1, e2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.size == 0 {
            return Err(ModelError::Format("structure size must be positive".into()));
        }
        check_partition(self.size, &self.e1, "E1")?;
        check_partition(self.size, &self.e2, "E2")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let s: EqStructure = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    fn partition(&self, rel: usize) -> &[Vec<usize>] {
        match rel {
            1 => &self.e1,
            2 => &self.e2,
            _ => panic!("relation index {rel}"),
        }
    }

    /// 0-based class index of element x (1-based) under relation 1 or 2;
    /// classes are numbered in order of their least element.
    pub fn class_of(&self, rel: usize, x: usize) -> usize {
        let p = self.partition(rel);
        let mut blocks: Vec<&Vec<usize>> = p.iter().collect();
        blocks.sort_by_key(|b| *b.iter().min().expect("nonempty"));
        blocks.iter().position(|b| b.contains(&x)).expect("covered")
    }

    pub fn related(&self, rel: usize, x: usize, y: usize) -> bool {
        self.partition(rel).iter().any(|b| b.contains(&x) && b.contains(&y))
    }

    pub fn class_count(&self, rel: usize) -> usize {
        self.partition(rel).len()
    }
}

/// All set partitions of {1..n} in a fixed order (restricted growth strings).
pub fn all_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(i: usize, n: usize, rgs: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let blocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let mut p = vec![Vec::new(); blocks];
            for (x, &b) in rgs.iter().enumerate() {
                p[b].push(x + 1);
            }
            out.push(p);
            return;
        }
        let limit = if i == 0 { 0 } else { max + 1 };
        for b in 0..=limit {
            rgs[i] = b;
            rec(i + 1, n, rgs, max.max(b), out);
        }
    }
    if n > 0 {
        rec(0, n, &mut rgs, 0, &mut out);
    }
    out
}

/// Every structure of size 1..=max_size.
pub fn all_structures(max_size: usize) -> Vec<EqStructure> {
    let mut out = Vec::new();
    for n in 1..=max_size {
        let ps = all_partitions(n);
        for a in &ps {
            for b in &ps {
                out.push(EqStructure { size: n, e1: a.clone(), e2: b.clone() });
            }
        }
    }
    out
}
