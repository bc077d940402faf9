//! Graph statistics and kernel two-sample distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CategoricalGraph;

const CLUSTERING_BINS: usize = 100;
const SPECTRUM_BINS: usize = 200;
const JACOBI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    /// `degree_hist[d]` = number of nodes of degree `d`.
    pub degree_hist: Vec<usize>,
    pub clustering: Vec<f64>,
    /// Normalised Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn graph_stats(g: &CategoricalGraph) -> GraphStats {
    let adj = g.adjacency();
    let n = adj.len();
    let degrees: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut degree_hist = vec![0; degrees.iter().copied().max().unwrap_or(0) + 1];
    for &d in &degrees {
        degree_hist[d] += 1;
    }

    let mut is_adj = vec![vec![false; n]; n];
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            is_adj[i][j] = true;
        }
    }
    let clustering = adj
        .iter()
        .map(|nb| {
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0;
            for (a, &u) in nb.iter().enumerate() {
                for &w in &nb[a + 1..] {
                    if is_adj[u][w] {
                        links += 1;
                    }
                }
            }
            links as f64 / (d * (d - 1) / 2) as f64
        })
        .collect();

    // L = D^{-1/2} (D - A) D^{-1/2}; isolated nodes get an all-zero row.
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut lap = vec![vec![0.0; n]; n];
    for i in 0..n {
        if degrees[i] > 0 {
            lap[i][i] = 1.0;
        }
        for &j in &adj[i] {
            lap[i][j] = -inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eigenvalues = symmetric_eigenvalues(lap);
    GraphStats {
        degree_hist,
        clustering,
        eigenvalues,
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `1e-9`. Returns eigenvalues in ascending order.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Degree,
    Clustering,
    Spectral,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Degree, Statistic::Clustering, Statistic::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Degree => "degree",
            Statistic::Clustering => "clustering",
            Statistic::Spectral => "spectral",
        }
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    v
}

fn binned(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &x in values {
        let k = (((x - lo) / (hi - lo)) * bins as f64).floor();
        h[(k.max(0.0) as usize).min(bins - 1)] += 1.0;
    }
    normalized(h)
}

/// One descriptor vector per graph, each a normalised histogram.
pub fn descriptors(graphs: &[CategoricalGraph], stat: Statistic) -> Vec<Vec<f64>> {
    graphs
        .iter()
        .map(|g| {
            let s = graph_stats(g);
            match stat {
                Statistic::Degree => normalized(s.degree_hist.iter().map(|&c| c as f64).collect()),
                Statistic::Clustering => binned(&s.clustering, 0.0, 1.0, CLUSTERING_BINS),
                Statistic::Spectral => binned(&s.eigenvalues, 0.0, 2.0 + 1e-9, SPECTRUM_BINS),
            }
        })
        .collect()
}

/// Euclidean distance, zero-padding the shorter vector.
fn distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let d = a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn kernel(a: &[f64], b: &[f64], bandwidth: f64) -> f64 {
    let d = distance(a, b);
    if d.is_infinite() {
        return 0.0;
    }
    (-d * d / (2.0 * bandwidth * bandwidth)).exp()
}

fn mean_kernel(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64, skip_diagonal: bool) -> f64 {
    let mut s = 0.0;
    let mut count = 0usize;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            s += kernel(x, y, bandwidth);
            count += 1;
        }
    }
    s / count as f64
}

fn check_sets(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    Ok(())
}

/// Unbiased MMD² with a Gaussian kernel. A singleton set has no distinct
/// pairs, so its within-set term falls back to `k(x, x) = 1`.
pub fn mmd2(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> Result<f64> {
    check_sets(a, b, bandwidth)?;
    let kaa = mean_kernel(a, a, bandwidth, a.len() > 1);
    let kbb = mean_kernel(b, b, bandwidth, b.len() > 1);
    Ok(kaa + kbb - 2.0 * cross_kernel(a, b, bandwidth))
}

/// Mean cross kernel, evaluated in both orders so swapping the sets gives
/// a bit-identical value.
fn cross_kernel(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> f64 {
    0.5 * (mean_kernel(a, b, bandwidth, false) + mean_kernel(b, a, bandwidth, false))
}

/// Biased (V-statistic) MMD², always ≥ 0 up to round-off.
pub fn mmd2_biased(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> Result<f64> {
    check_sets(a, b, bandwidth)?;
    Ok(mean_kernel(a, a, bandwidth, false) + mean_kernel(b, b, bandwidth, false)
        - 2.0 * cross_kernel(a, b, bandwidth))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn pairwise(set: &[Vec<f64>]) -> Vec<f64> {
    let mut d = Vec::new();
    for (i, x) in set.iter().enumerate() {
        for y in &set[i + 1..] {
            d.push(distance(x, y));
        }
    }
    d
}

/// Median pairwise distance of `reference`; if zero, the median over the
/// pooled sets; if still zero, 1.
pub fn median_bandwidth(reference: &[Vec<f64>], other: &[Vec<f64>]) -> f64 {
    let m = median(pairwise(reference));
    if m > 0.0 {
        return m;
    }
    let pooled: Vec<Vec<f64>> = reference.iter().chain(other).cloned().collect();
    let m = median(pairwise(&pooled));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Per-statistic unbiased MMD² between `samples` and `reference`,
/// bandwidth from the reference set.
pub fn statistic_mmd(samples: &[CategoricalGraph], reference: &[CategoricalGraph], stat: Statistic) -> Result<f64> {
    let a = descriptors(samples, stat);
    let b = descriptors(reference, stat);
    let bw = median_bandwidth(&b, &a);
    mmd2(&a, &b, bw)
}

/// As [`statistic_mmd`] with the biased estimator.
pub fn statistic_mmd_biased(
    samples: &[CategoricalGraph],
    reference: &[CategoricalGraph],
    stat: Statistic,
) -> Result<f64> {
    let a = descriptors(samples, stat);
    let b = descriptors(reference, stat);
    let bw = median_bandwidth(&b, &a);
    mmd2_biased(&a, &b, bw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdReport {
    pub degree: f64,
    pub clustering: f64,
    pub spectral: f64,
    /// Present when a train set was supplied and some statistic survived
    /// the exclusion rule.
    pub ratio: Option<f64>,
}

impl MmdReport {
    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Degree => self.degree,
            Statistic::Clustering => self.clustering,
            Statistic::Spectral => self.spectral,
        }
    }
}

/// Unbiased MMD² of each statistic, clamped at 0.
pub fn mmd_values(samples: &[CategoricalGraph], reference: &[CategoricalGraph]) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, stat) in out.iter_mut().zip(Statistic::ALL) {
        *slot = statistic_mmd(samples, reference, stat)?.max(0.0);
    }
    Ok(out)
}

fn biased_values(samples: &[CategoricalGraph], reference: &[CategoricalGraph]) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, stat) in out.iter_mut().zip(Statistic::ALL) {
        *slot = statistic_mmd_biased(samples, reference, stat)?.max(0.0);
    }
    Ok(out)
}

/// Mean of `gen_test[k] / train_test[k]` over statistics whose train-test
/// value is non-zero.
pub fn ratio_from_mmds(gen_test: &[f64], train_test: &[f64]) -> Result<f64> {
    let kept: Vec<f64> = gen_test
        .iter()
        .zip(train_test)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&g, &d)| g / d)
        .collect();
    if kept.is_empty() {
        return Err(Error::AllStatisticsExcluded);
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Ratio of generated-vs-test to train-vs-test MMD², averaged over
/// statistics. Uses the biased estimator: the unbiased one scatters around
/// zero when train and test share a distribution, which would exclude most
/// statistics.
pub fn ratio_metric(gen: &[CategoricalGraph], test: &[CategoricalGraph], train: &[CategoricalGraph]) -> Result<f64> {
    if gen.is_empty() || test.is_empty() || train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    ratio_from_mmds(&biased_values(gen, test)?, &biased_values(train, test)?)
}

/// Unbiased MMD² of `gen` against `test`, plus the ratio when `train` is given.
pub fn mmd_report(
    gen: &[CategoricalGraph],
    test: &[CategoricalGraph],
    train: Option<&[CategoricalGraph]>,
) -> Result<MmdReport> {
    let v = mmd_values(gen, test)?;
    let ratio = match train {
        Some(tr) => match ratio_metric(gen, test, tr) {
            Ok(r) => Some(r),
            Err(Error::AllStatisticsExcluded) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(MmdReport {
        degree: v[0],
        clustering: v[1],
        spectral: v[2],
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn small_graph_statistics() {
        let k3 = CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(graph_stats(&k3).clustering, vec![1.0; 3]);
        let path = CategoricalGraph::from_skeleton(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.degrees(), vec![1, 2, 1]);
        assert_eq!(graph_stats(&path).degree_hist, vec![0, 2, 1]);
        let k2 = CategoricalGraph::from_skeleton(2, &[(0, 1)]).unwrap();
        let ev = graph_stats(&k2).eigenvalues;
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_characteristic_polynomial() {
        // 2x2 [[a, b], [b, c]] has eigenvalues (a+c)/2 ± sqrt(((a-c)/2)^2 + b^2)
        let mut rng = seeded(2);
        for _ in 0..50 {
            let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
            let ev = symmetric_eigenvalues(vec![vec![a, b], vec![b, c]]);
            let r = (((a - c) / 2.0).powi(2) + b * b).sqrt();
            assert!((ev[0] - ((a + c) / 2.0 - r)).abs() < 1e-9);
            assert!((ev[1] - ((a + c) / 2.0 + r)).abs() < 1e-9);
        }
        // trace and sum of squares are preserved on a larger random matrix
        let n = 7;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[i][j] = x;
                m[j][i] = x;
            }
        }
        let trace: f64 = (0..n).map(|i| m[i][i]).sum();
        let frob: f64 = m.iter().flatten().map(|x| x * x).sum();
        let ev = symmetric_eigenvalues(m);
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9);
        assert!((ev.iter().map(|x| x * x).sum::<f64>() - frob).abs() < 1e-8);
    }

    #[test]
    fn cycle_spectrum() {
        // C_n normalised Laplacian: 1 - cos(2πk/n)
        let n = 6;
        let e: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let ev = graph_stats(&CategoricalGraph::from_skeleton(n, &e).unwrap()).eigenvalues;
        let mut expect: Vec<f64> = (0..n)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mmd_examples() {
        let a = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![1.0, 0.0]];
        assert!(mmd2_biased(&a, &a, 0.7).unwrap().abs() < 1e-12);
        let b = vec![vec![0.3, 0.7], vec![0.0, 1.0]];
        assert_eq!(mmd2(&a, &b, 0.5).unwrap(), mmd2(&b, &a, 0.5).unwrap());
        let far = mmd2(&[vec![0.0]], &[vec![1e6]], 1.0).unwrap();
        assert!((far - 2.0).abs() < 1e-12);
        assert!((mmd2_biased(&[vec![0.0]], &[vec![1e9]], 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(mmd2(&[], &b, 1.0).is_err());
    }

    #[test]
    fn unbiased_mmd_by_hand() {
        // distances: within a = 1, within b = 1, cross = 0, 2, 1, 1 (1-d points)
        let a = vec![vec![0.0], vec![1.0]];
        let b = vec![vec![0.0], vec![1.0]];
        // identical two-point sets: within terms e^{-1/2}, cross mean (2 + 2e^{-1/2}) / 4
        let k = (-0.5f64).exp();
        let expect = 2.0 * k - 2.0 * (2.0 + 2.0 * k) / 4.0;
        assert!((mmd2(&a, &b, 1.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn ratio_rules() {
        assert_eq!(ratio_from_mmds(&[0.2, 0.4, 0.9], &[0.1, 0.0, 0.3]).unwrap(), (2.0 + 3.0) / 2.0);
        let c = 7.5;
        let r1 = ratio_from_mmds(&[0.2, 0.4], &[0.1, 0.8]).unwrap();
        let r2 = ratio_from_mmds(&[0.2 * c, 0.4 * c], &[0.1 * c, 0.8 * c]).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        assert!(matches!(ratio_from_mmds(&[1.0], &[0.0]), Err(Error::AllStatisticsExcluded)));
    }

    #[test]
    fn ratio_of_train_against_itself_is_one() {
        let mut rng = seeded(5);
        let random_graph = |rng: &mut crate::rng::StreamRng| {
            let n = rng.gen_range(4..8);
            let e: Vec<(usize, usize)> = crate::graph::pairs(n).filter(|_| rng.gen::<f64>() < 0.4).collect();
            CategoricalGraph::from_skeleton(n, &e).unwrap()
        };
        let train: Vec<_> = (0..10).map(|_| random_graph(&mut rng)).collect();
        let test: Vec<_> = (0..10).map(|_| random_graph(&mut rng)).collect();
        assert!((ratio_metric(&train, &test, &train).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_fallbacks() {
        let same = vec![vec![1.0, 0.0]; 3];
        let other = vec![vec![0.0, 1.0]];
        // pooled distances: three zeros and three of sqrt(2)
        assert!((median_bandwidth(&same, &other) - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(median_bandwidth(&same, &same), 1.0);
    }
}
