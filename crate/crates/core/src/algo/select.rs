//! Candidate selection shared by the side-information algorithms.

use super::membership::MembershipTable;

/// Cluster ids ordered by size descending, ties by id.
pub(crate) fn ranked(table: &MembershipTable, active: &[usize]) -> Vec<usize> {
    let mut r = active.to_vec();
    r.sort_by(|&a, &b| table.size(b).cmp(&table.size(a)).then(a.cmp(&b)));
    r
}

/// Rank of the first maximum score of `v` over `ranked`.
pub(crate) fn best_rank(table: &MembershipTable, ranked: &[usize], v: usize) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (j, &c) in ranked.iter().enumerate() {
        let s = table.score(v, c);
        if s > best_score {
            best_score = s;
            best = j;
        }
    }
    best
}

/// The vertex whose best cluster has the smallest rank, ties to the lowest id.
pub(crate) fn select_vertex(table: &MembershipTable, ranked: &[usize], pending: &[usize]) -> (usize, usize) {
    let mut pick = (pending[0], usize::MAX);
    for &v in pending {
        let j = best_rank(table, ranked, v);
        if j < pick.1 {
            pick = (v, j);
            if j == 0 {
                break;
            }
        }
    }
    pick
}

/// Dyadic size class of a cluster relative to the largest one:
/// class `i ≥ 1` holds sizes in `(top / 2^i, top / 2^(i-1)]`.
pub(crate) fn size_class(size: usize, top: usize) -> u32 {
    let mut i = 1;
    while (size as u128) << i <= top as u128 {
        i += 1;
    }
    i
}

/// Best-scoring cluster of each dyadic class among ranks `< j`, in class order.
pub(crate) fn dyadic_candidates(table: &MembershipTable, ranked: &[usize], j: usize, v: usize) -> Vec<usize> {
    if j == 0 {
        return Vec::new();
    }
    let top = table.size(ranked[0]);
    let mut best: Vec<(u32, usize, f64)> = Vec::new();
    for &c in &ranked[..j] {
        let class = size_class(table.size(c), top);
        let s = table.score(v, c);
        match best.iter_mut().find(|e| e.0 == class) {
            Some(e) if s > e.2 => *e = (class, c, s),
            Some(_) => {}
            None => best.push((class, c, s)),
        }
    }
    best.sort_by_key(|e| e.0);
    best.into_iter().map(|e| e.1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes() {
        assert_eq!(size_class(100, 100), 1);
        assert_eq!(size_class(51, 100), 1);
        assert_eq!(size_class(50, 100), 2);
        assert_eq!(size_class(26, 100), 2);
        assert_eq!(size_class(25, 100), 3);
        assert_eq!(size_class(1, 100), 7);
        assert_eq!(size_class(1, 1), 1);
    }
}
