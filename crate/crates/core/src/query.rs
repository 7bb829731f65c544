//! Additive query functions `f(x) = Σ f_i(x_i)` and the per-cluster lower
//! bounds that drive pruning.

use std::str::FromStr;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::matrix::{DistanceMatrix, ScoreMatrix};
use crate::partition::PartitionScheme;
use crate::{Value, INFINITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Distance,
    Pssm,
}

/// Position-wise cost table: lower values are better matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryFunction {
    sigma: usize,
    table: Vec<Value>,
    provenance: Provenance,
}

/// `f_i(a) = D(ω_i, a)`, the distance from `ω` to a fragment.
pub fn distance_query(matrix: &DistanceMatrix, omega: &[u8]) -> QueryFunction {
    let table = omega.iter().flat_map(|&w| matrix.row(w).iter().copied()).collect();
    QueryFunction {
        sigma: matrix.alphabet().len(),
        table,
        provenance: Provenance::Distance,
    }
}

/// `f_i(a) = columns[i][a]`; the table is in cost orientation.
pub fn pssm_query(sigma: usize, columns: &[Vec<Value>]) -> Result<QueryFunction> {
    if columns.is_empty() {
        return Err(Error::Query("PSSM has no positions".into()));
    }
    if let Some(i) = columns.iter().position(|c| c.len() != sigma) {
        return Err(Error::Query(format!(
            "PSSM position {i} has {} values for a {sigma}-letter alphabet",
            columns[i].len()
        )));
    }
    Ok(QueryFunction {
        sigma,
        table: columns.concat(),
        provenance: Provenance::Pssm,
    })
}

/// Radius of the distance query equivalent to `{x : s(ω, x) >= t}`.
pub fn similarity_threshold_to_radius(matrix: &ScoreMatrix, omega: &[u8], t: Value) -> Value {
    matrix.weight(omega) - t
}

impl QueryFunction {
    pub fn len(&self) -> usize {
        self.table.len() / self.sigma
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.sigma
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    pub fn value(&self, i: usize, code: u8) -> Value {
        self.table[i * self.sigma + code as usize]
    }

    pub fn position(&self, i: usize) -> &[Value] {
        &self.table[i * self.sigma..(i + 1) * self.sigma]
    }

    /// `f(x)` over the first `min(|x|, m)` positions.
    pub fn evaluate(&self, x: &[u8]) -> Value {
        x.iter()
            .take(self.len())
            .enumerate()
            .map(|(i, &c)| self.value(i, c))
            .sum()
    }

    /// Position-wise minimum over several query functions of equal shape.
    pub fn pointwise_min(queries: &[QueryFunction]) -> Result<QueryFunction> {
        let first = queries
            .first()
            .ok_or_else(|| Error::Query("no queries to combine".into()))?;
        if queries
            .iter()
            .any(|q| q.sigma != first.sigma || q.table.len() != first.table.len())
        {
            return Err(Error::Query("queries differ in shape".into()));
        }
        let table = (0..first.table.len())
            .map(|k| queries.iter().map(|q| q.table[k]).min().unwrap())
            .collect();
        Ok(QueryFunction {
            sigma: first.sigma,
            table,
            provenance: Provenance::Pssm,
        })
    }
}

/// Orientation of a PSSM file: scores are negated into costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Score,
    Cost,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "score" => Ok(Self::Score),
            "cost" => Ok(Self::Cost),
            other => Err(Error::Query(format!("unknown PSSM orientation {other:?}"))),
        }
    }
}

/// Reads a PSSM: a header of letters, then one row of integers per position.
///
/// Cells are tab- or space-separated. A row may start with a non-numeric
/// label, which is ignored. Columns are reordered to the alphabet's ordinals.
pub fn parse_pssm(text: &str, alphabet: &Alphabet, orientation: Orientation) -> Result<QueryFunction> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or(Error::PssmFormat {
        line: 0,
        message: "empty PSSM".into(),
    })?;
    let mut column_code = Vec::new();
    for token in header.split_whitespace() {
        let &[b] = token.as_bytes() else {
            return Err(Error::PssmFormat {
                line: header_line,
                message: format!("header token {token:?} is not a letter"),
            });
        };
        let code = alphabet.code(b).ok_or(Error::PssmFormat {
            line: header_line,
            message: format!("letter {:?} is not in the alphabet", b as char),
        })?;
        if column_code.contains(&code) {
            return Err(Error::PssmFormat {
                line: header_line,
                message: format!("letter {:?} repeated", b as char),
            });
        }
        column_code.push(code);
    }
    if column_code.len() != alphabet.len() {
        return Err(Error::PssmFormat {
            line: header_line,
            message: format!("{} columns for a {}-letter alphabet", column_code.len(), alphabet.len()),
        });
    }

    let mut columns = Vec::new();
    for (line, row) in lines {
        let mut tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() == column_code.len() + 1 {
            tokens.remove(0);
        }
        if tokens.len() != column_code.len() {
            return Err(Error::PssmFormat {
                line,
                message: format!("{} values, expected {}", tokens.len(), column_code.len()),
            });
        }
        let mut values = vec![0; alphabet.len()];
        for (&code, token) in column_code.iter().zip(tokens) {
            let v: Value = token.parse().map_err(|_| Error::PssmFormat {
                line,
                message: format!("{token:?} is not an integer"),
            })?;
            values[code as usize] = match orientation {
                Orientation::Cost => v,
                Orientation::Score => -v,
            };
        }
        columns.push(values);
    }
    pssm_query(alphabet.len(), &columns)
}

/// A query shifted so that every position's minimum is zero.
///
/// Pruning on partial sums is only sound for non-negative position values;
/// searches therefore run on `base` and report `base + shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedQuery {
    pub base: QueryFunction,
    pub shift: Value,
}

pub fn normalize(f: &QueryFunction) -> NormalizedQuery {
    let mut base = f.clone();
    let mut shift = 0;
    for i in 0..f.len() {
        let min = *f.position(i).iter().min().expect("non-empty alphabet");
        shift += min;
        for v in &mut base.table[i * f.sigma..(i + 1) * f.sigma] {
            *v -= min;
        }
    }
    NormalizedQuery { base, shift }
}

impl NormalizedQuery {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Radius against `base` equivalent to `f(x) <= epsilon`.
    pub fn base_radius(&self, epsilon: Value) -> Value {
        if epsilon == INFINITY {
            INFINITY
        } else {
            epsilon.saturating_sub(self.shift)
        }
    }

    pub fn denormalize(&self, base_value: Value) -> Value {
        base_value + self.shift
    }
}

/// Precomputed bounds of a normalized query over one partition scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundTable {
    bounds: Vec<Vec<Value>>,
    root: Vec<usize>,
    second_min: Vec<Value>,
    rank_offsets: Vec<Vec<isize>>,
    root_rank: usize,
    root_bound: Value,
}

impl LowerBoundTable {
    pub fn new(query: &NormalizedQuery, scheme: &PartitionScheme) -> Result<Self> {
        if query.len() != scheme.len() {
            return Err(Error::LengthMismatch {
                query: query.len(),
                index: scheme.len(),
                reason: "lower bounds need one query position per index position",
            });
        }
        Ok(Self::with_depth(query, scheme, scheme.len()))
    }

    /// Bounds over the first `depth` positions only. Later positions of the
    /// root take cluster rank 0.
    pub(crate) fn with_depth(query: &NormalizedQuery, scheme: &PartitionScheme, depth: usize) -> Self {
        assert!(depth <= query.len() && depth <= scheme.len());
        let mut bounds = Vec::with_capacity(depth);
        let mut root = Vec::with_capacity(depth);
        let mut second_min = Vec::with_capacity(depth);
        let mut rank_offsets = Vec::with_capacity(depth);
        let mut root_rank = 0;
        let mut root_bound = 0;
        for i in 0..depth {
            let f = query.base.position(i);
            let per_cluster: Vec<Value> = (0..scheme.size(i))
                .map(|r| {
                    scheme
                        .cluster(i, r)
                        .iter()
                        .map(|&c| f[c as usize])
                        .min()
                        .expect("clusters are non-empty")
                })
                .collect();
            // lowest rank wins ties
            let z = (0..per_cluster.len()).min_by_key(|&r| (per_cluster[r], r)).unwrap();
            let second = (0..per_cluster.len())
                .filter(|&r| r != z)
                .map(|r| per_cluster[r])
                .min()
                .unwrap_or(INFINITY);
            let radix = scheme.radix(i) as isize;
            rank_offsets.push(
                (0..per_cluster.len())
                    .map(|r| (r as isize - z as isize) * radix)
                    .collect(),
            );
            root_rank += z * scheme.radix(i);
            root_bound += per_cluster[z];
            bounds.push(per_cluster);
            root.push(z);
            second_min.push(second);
        }
        Self {
            bounds,
            root,
            second_min,
            rank_offsets,
            root_rank,
            root_bound,
        }
    }

    pub fn depth(&self) -> usize {
        self.root.len()
    }

    /// `F_i(γ)` for cluster rank `cluster` at position `i`.
    #[inline]
    pub fn bound(&self, i: usize, cluster: usize) -> Value {
        self.bounds[i][cluster]
    }

    pub fn bounds(&self, i: usize) -> &[Value] {
        &self.bounds[i]
    }

    /// Cluster rank `Z_i` of the root bin at position `i`.
    #[inline]
    pub fn root_cluster(&self, i: usize) -> usize {
        self.root[i]
    }

    pub fn root_clusters(&self) -> &[usize] {
        &self.root
    }

    /// Smallest bound at position `i` over clusters other than `Z_i`.
    #[inline]
    pub fn second_min(&self, i: usize) -> Value {
        self.second_min[i]
    }

    /// `ξ_i(γ) - ξ_i(Z_i)`.
    #[inline]
    pub fn rank_offset(&self, i: usize, cluster: usize) -> isize {
        self.rank_offsets[i][cluster]
    }

    pub fn root_rank(&self) -> usize {
        self.root_rank
    }

    /// `F(Z)`, the smallest bound of any bin.
    pub fn root_bound(&self) -> Value {
        self.root_bound
    }

    /// `F(B)` for a bin given by its cluster ranks.
    pub fn bin_bound(&self, digits: &[usize]) -> Value {
        digits
            .iter()
            .take(self.depth())
            .enumerate()
            .map(|(i, &d)| self.bounds[i][d])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{all_fragments, example_distance, example_scores};
    use proptest::prelude::*;

    #[test]
    fn example_one_distances() {
        let d = example_distance();
        let a = d.alphabet().clone();
        let f = distance_query(&d, &a.encode(b"abd").unwrap());
        assert_eq!(f.evaluate(&a.encode(b"cad").unwrap()), 11);
        assert_eq!(f.evaluate(&a.encode(b"cbb").unwrap()), 6);
        assert_eq!(f.evaluate(&a.encode(b"bca").unwrap()), 25);
        assert_eq!(f.evaluate(&a.encode(b"abd").unwrap()), 0);
        assert_eq!(f.provenance(), Provenance::Distance);
    }

    #[test]
    fn threshold_to_radius_matches_brute_force() {
        let s = example_scores();
        let d = example_distance();
        let omega = s.alphabet().encode(b"abd").unwrap();
        assert_eq!(similarity_threshold_to_radius(&s, &omega, 9), 7);
        assert_eq!(similarity_threshold_to_radius(&s, &omega, 16), 0);
        let f = distance_query(&d, &omega);
        for x in all_fragments(4, 3) {
            assert_eq!(s.similarity(&omega, &x) >= 9, f.evaluate(&x) <= 7);
        }
    }

    #[test]
    fn pssm_equivalent_to_distance_rows() {
        let d = example_distance();
        let omega = [0u8, 1, 3];
        let rows: Vec<Vec<Value>> = omega.iter().map(|&w| d.row(w).to_vec()).collect();
        let p = pssm_query(4, &rows).unwrap();
        let f = distance_query(&d, &omega);
        for x in all_fragments(4, 3) {
            assert_eq!(p.evaluate(&x), f.evaluate(&x));
        }
        let zero = pssm_query(4, &vec![vec![0; 4]; 3]).unwrap();
        assert!(all_fragments(4, 3).iter().all(|x| zero.evaluate(x) == 0));
        assert!(pssm_query(4, &[vec![0; 3]]).is_err());
    }

    #[test]
    fn pointwise_min_bounds_every_hit_distance() {
        let d = example_distance();
        let hits: Vec<Vec<u8>> = vec![vec![0, 1, 3], vec![2, 2, 0], vec![3, 1, 1]];
        let qs: Vec<_> = hits.iter().map(|h| distance_query(&d, h)).collect();
        let p = QueryFunction::pointwise_min(&qs).unwrap();
        for x in all_fragments(4, 3) {
            let best = hits.iter().map(|h| d.distance(h, &x)).min().unwrap();
            assert!(p.evaluate(&x) <= best);
        }
    }

    #[test]
    fn normalization_shift() {
        let d = example_distance();
        let f = distance_query(&d, &[0, 1, 3]);
        let n = normalize(&f);
        assert_eq!(n.shift, 0);
        assert_eq!(n.base, f);

        let mut rows: Vec<Vec<Value>> = [0u8, 1, 3].iter().map(|&w| d.row(w).to_vec()).collect();
        rows[1] = vec![-3; 4];
        let g = pssm_query(4, &rows).unwrap();
        let n = normalize(&g);
        assert_eq!(n.shift, -3);
        for x in all_fragments(4, 3) {
            assert_eq!(n.base.evaluate(&x) + n.shift, g.evaluate(&x));
        }
    }

    #[test]
    fn parse_pssm_orientations() {
        let a = Alphabet::new("abcd").unwrap();
        let text = "# comment\nb\ta\tc\td\n1\t2\t3\t4\npos1\t0\t0\t-5\t1\n";
        let cost = parse_pssm(text, &a, Orientation::Cost).unwrap();
        assert_eq!(cost.len(), 2);
        assert_eq!(cost.position(0), &[2, 1, 3, 4]);
        assert_eq!(cost.position(1), &[0, 0, -5, 1]);
        let score = parse_pssm(text, &a, Orientation::Score).unwrap();
        assert_eq!(score.position(0), &[-2, -1, -3, -4]);
        assert!(parse_pssm("a b c\n1 2 3\n", &a, Orientation::Cost).is_err());
        assert!(matches!(
            parse_pssm("a b c d\n1 2 x 3\n", &a, Orientation::Cost),
            Err(Error::PssmFormat { line: 2, .. })
        ));
    }

    #[test]
    fn example_three_bounds() {
        let d = example_distance();
        let a = d.alphabet().clone();
        let scheme = PartitionScheme::parse("ac,bd", &a, 3).unwrap();
        let q = normalize(&distance_query(&d, &a.encode(b"abd").unwrap()));
        let t = LowerBoundTable::new(&q, &scheme).unwrap();
        assert_eq!(t.bounds(0), &[0, 7]);
        assert_eq!(t.bounds(1), &[8, 0]);
        assert_eq!(t.bounds(2), &[8, 0]);
        assert_eq!(t.root_clusters(), &[0, 1, 1]);
        assert_eq!(t.root_rank(), scheme.bin_of(&a.encode(b"abd").unwrap()));
        assert_eq!(t.root_bound(), 0);
        assert_eq!((t.second_min(0), t.second_min(1), t.second_min(2)), (7, 8, 8));
        assert_eq!(t.rank_offset(0, 1), 4);
        assert_eq!(t.rank_offset(1, 0), -2);
    }

    #[test]
    fn root_is_query_bin_when_query_clusters_are_present() {
        let d = example_distance();
        let a = d.alphabet().clone();
        let scheme = PartitionScheme::parse("ab,cd", &a, 3).unwrap();
        for omega in all_fragments(4, 3) {
            let q = normalize(&distance_query(&d, &omega));
            let t = LowerBoundTable::new(&q, &scheme).unwrap();
            assert_eq!(t.root_rank(), scheme.bin_of(&omega));
        }
    }

    #[test]
    fn length_mismatch() {
        let d = example_distance();
        let scheme = PartitionScheme::parse("ac,bd", d.alphabet(), 3).unwrap();
        let q = normalize(&distance_query(&d, &[0, 1]));
        assert!(matches!(
            LowerBoundTable::new(&q, &scheme),
            Err(Error::LengthMismatch { query: 2, index: 3, .. })
        ));
    }

    fn arb_pssm(m: usize) -> impl Strategy<Value = Vec<Vec<Value>>> {
        prop::collection::vec(prop::collection::vec(-20i64..20, 4), m)
    }

    proptest! {
        #[test]
        fn bounds_are_sound_and_monotone(cols in arb_pssm(3), spec_choice in 0usize..3) {
            let a = Alphabet::new("abcd").unwrap();
            let spec = ["ac,bd", "a,bcd", "ab,c,d"][spec_choice];
            let scheme = PartitionScheme::parse(spec, &a, 3).unwrap();
            let f = pssm_query(4, &cols).unwrap();
            let q = normalize(&f);
            let t = LowerBoundTable::new(&q, &scheme).unwrap();
            let frags = all_fragments(4, 3);
            for rank in 0..scheme.n_bins() {
                let digits = scheme.digits(rank);
                let fb = t.bin_bound(&digits);
                prop_assert!(fb >= t.root_bound());
                let members: Vec<_> = frags.iter().filter(|x| scheme.bin_of(x) == rank).collect();
                let min = members.iter().map(|x| q.base.evaluate(x)).min().unwrap();
                prop_assert!(fb <= min);
                // an edge of the implicit tree replaces a root cluster
                for i in 0..3 {
                    if digits[i] == t.root_cluster(i) {
                        for g in 0..scheme.size(i) {
                            let mut child = digits.clone();
                            child[i] = g;
                            prop_assert!(t.bin_bound(&child) >= fb);
                        }
                    }
                }
            }
            for x in &frags {
                prop_assert_eq!(q.base.evaluate(x) + q.shift, f.evaluate(x));
                let mut partial = 0;
                let full = q.base.evaluate(x);
                for (i, &c) in x.iter().enumerate() {
                    partial += q.base.value(i, c);
                    prop_assert!(partial <= full);
                }
            }
        }

        #[test]
        fn normalized_answers_equal(cols in arb_pssm(3), eps in -30i64..60) {
            let f = pssm_query(4, &cols).unwrap();
            let q = normalize(&f);
            for x in all_fragments(4, 3) {
                prop_assert_eq!(f.evaluate(&x) <= eps, q.base.evaluate(&x) <= q.base_radius(eps));
            }
        }
    }
}
