//! Progressive edge growth.

use std::collections::VecDeque;

use crate::numerics::RngStream;

/// Returns the variable list of every check.
///
/// Each variable gets `var_degree` edges. Every edge goes to the check that
/// is farthest from the variable in the current graph (unreachable counts as
/// infinitely far), among checks still below `max_check_degree`; ties go to
/// the lowest degree, then to a seeded draw.
pub(super) fn build(n: usize, m: usize, var_degree: usize, max_check_degree: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = RngStream::new(seed, &[crate::numerics::tag("peg")]);
    let mut check_vars: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut var_checks: Vec<Vec<u32>> = vec![Vec::new(); n];

    let mut check_depth = vec![usize::MAX; m];
    let mut var_seen = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut stamp = 0usize;

    for v in 0..n {
        for e in 0..var_degree {
            // depth at which each check is first reached from v; unreached stays at MAX
            check_depth.iter_mut().for_each(|d| *d = usize::MAX);
            if e > 0 {
                queue.clear();
                stamp += 1;
                var_seen[v] = stamp;
                for &c in &var_checks[v] {
                    check_depth[c as usize] = 0;
                    queue.push_back(c as usize);
                }
                while let Some(c) = queue.pop_front() {
                    let d = check_depth[c];
                    for &u in &check_vars[c] {
                        let u = u as usize;
                        if var_seen[u] == stamp {
                            continue;
                        }
                        var_seen[u] = stamp;
                        for &c2 in &var_checks[u] {
                            let c2 = c2 as usize;
                            if check_depth[c2] == usize::MAX {
                                check_depth[c2] = d + 1;
                                queue.push_back(c2);
                            }
                        }
                    }
                }
            }
            // farthest open check, then lowest degree
            let open: Vec<usize> = (0..m).filter(|&c| check_vars[c].len() < max_check_degree).collect();
            let pool: Vec<usize> = if open.is_empty() { (0..m).collect() } else { open };
            let far = pool.iter().map(|&c| check_depth[c]).max().expect("at least one check");
            let deepest: Vec<usize> = pool.into_iter().filter(|&c| check_depth[c] == far).collect();
            let min_deg = deepest.iter().map(|&c| check_vars[c].len()).min().unwrap();
            let ties: Vec<usize> = deepest
                .iter()
                .copied()
                .filter(|&c| check_vars[c].len() == min_deg)
                .collect();
            let pick = ties[(rng.next_u64() % ties.len() as u64) as usize];
            check_vars[pick].push(v as u32);
            var_checks[v].push(pick as u32);
        }
    }
    check_vars
}
