use crate::error::{Error, Result};

/// One term of Wick's theorem for `⟨:φ^{r_1}:(x_1)⋯:φ^{r_n}:(x_n)⟩`: the
/// number `l_ij` of contractions between each pair of vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionGraph {
    pub degrees: Vec<usize>,
    /// Symmetric with zero diagonal.
    pub edges: Vec<Vec<u32>>,
    /// `Π_i r_i! / Π_{i<j} l_ij!`.
    pub weight: u128,
}

impl ContractionGraph {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }

    /// Edge list `(i, j)` with `i < j`, each repeated `l_ij` times, in
    /// lexicographic order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for _ in 0..self.edges[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn factorial_u128(r: usize) -> u128 {
    (1..=r as u128).product()
}

/// All contraction graphs for the given degrees, in lexicographic order of
/// `(l_01, l_02, …, l_{n−2,n−1})`.
pub fn enumerate_contractions(degrees: &[usize], cap: usize) -> Result<Vec<ContractionGraph>> {
    let total: usize = degrees.iter().sum();
    if total > cap {
        return Err(Error::CombinatorialBudgetExceeded { total, cap });
    }
    let n = degrees.len();
    if n == 0 {
        return Err(Error::InvalidInput("at least one vertex is required".into()));
    }
    let mut out = Vec::new();
    if total % 2 == 1 {
        return Ok(out);
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut rem = degrees.to_vec();
    let mut vals = vec![0u32; pairs.len()];
    let numer: u128 = degrees.iter().map(|&r| factorial_u128(r)).product();
    fn rec(
        p: usize,
        pairs: &[(usize, usize)],
        rem: &mut [usize],
        vals: &mut [u32],
        degrees: &[usize],
        numer: u128,
        out: &mut Vec<ContractionGraph>,
    ) {
        if p == pairs.len() {
            if rem.iter().all(|&r| r == 0) {
                let n = degrees.len();
                let mut edges = vec![vec![0u32; n]; n];
                let mut denom: u128 = 1;
                for (&(i, j), &l) in pairs.iter().zip(vals.iter()) {
                    edges[i][j] = l;
                    edges[j][i] = l;
                    denom *= factorial_u128(l as usize);
                }
                out.push(ContractionGraph { degrees: degrees.to_vec(), edges, weight: numer / denom });
            }
            return;
        }
        let (i, j) = pairs[p];
        let max = rem[i].min(rem[j]);
        let last_for_i = j == degrees.len() - 1;
        for l in 0..=max {
            // vertex i has no later pairs once j is the last vertex
            if last_for_i && rem[i] != l {
                continue;
            }
            rem[i] -= l;
            rem[j] -= l;
            vals[p] = l as u32;
            rec(p + 1, pairs, rem, vals, degrees, numer, out);
            rem[i] += l;
            rem[j] += l;
        }
        vals[p] = 0;
    }
    rec(0, &pairs, &mut rem, &mut vals, degrees, numer, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let g = enumerate_contractions(&[2, 2], 16).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].edges[0][1], 2);
        assert_eq!(g[0].weight, 2);
        let g = enumerate_contractions(&[2, 2, 2], 16).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].weight, 8);
        assert!(enumerate_contractions(&[3, 2], 16).unwrap().is_empty());
        assert!(enumerate_contractions(&[4], 16).unwrap().is_empty());
        assert_eq!(enumerate_contractions(&[0], 16).unwrap().len(), 1);
        assert!(matches!(
            enumerate_contractions(&[10, 8], 16),
            Err(Error::CombinatorialBudgetExceeded { total: 18, cap: 16 })
        ));
    }
}
