//! Integer partitions.

/// All partitions of `n`, each written with non-increasing parts, in
/// decreasing lexicographic order: `[4], [3, 1], [2, 2], [2, 1, 1], [1, 1, 1, 1]`.
///
/// `partitions(0)` is the single empty partition.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(n, n, &mut current, &mut out);
    out
}

fn fill(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for part in (1..=remaining.min(max_part)).rev() {
        current.push(part);
        fill(remaining - part, part, current, out);
        current.pop();
    }
}

/// Number of partitions of `n` by Euler's pentagonal recurrence; independent
/// of the enumeration above.
pub fn partition_count(n: u32) -> u64 {
    let n = n as usize;
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for i in 1..=n {
        let mut acc = 0i64;
        for k in 1.. {
            let k = k as i64;
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += sign * p[i - g1];
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= i {
                acc += sign * p[i - g2];
            }
        }
        p[i] = acc;
    }
    p[n] as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(partitions(0), vec![Vec::<u32>::new()]);
        assert_eq!(partitions(2), vec![vec![2], vec![1, 1]]);
        assert_eq!(partitions(3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(
            partitions(4),
            vec![
                vec![4],
                vec![3, 1],
                vec![2, 2],
                vec![2, 1, 1],
                vec![1, 1, 1, 1]
            ]
        );
    }

    #[test]
    fn counts_agree_with_pentagonal_recurrence() {
        for n in 0..=20 {
            let ps = partitions(n);
            assert_eq!(ps.len() as u64, partition_count(n), "n = {n}");
            for p in &ps {
                assert_eq!(p.iter().sum::<u32>(), n);
                assert!(p.windows(2).all(|w| w[0] >= w[1]));
            }
            assert!(ps.windows(2).all(|w| w[0] > w[1]));
        }
        assert_eq!(partition_count(10), 42);
    }
}
