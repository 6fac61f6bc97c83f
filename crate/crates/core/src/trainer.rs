//! Local training: synthetic task, multinomial logistic regression, FedAvg.
//!
//! The built-in task is a balanced mixture of Gaussian blobs: `k` class means
//! drawn from a zero-centered normal scaled by a margin factor, unit noise
//! around each mean. It is cheap to sample at any size, linearly separable
//! enough for logistic regression, and its difficulty is tunable through the
//! margin alone.
//!
//! The model is multinomial logistic regression stored as one flat parameter
//! vector (`k * d` weights row-major, then `k` biases), trained with plain
//! mini-batch SGD at a constant learning rate on softmax cross-entropy.
//! No momentum, no weight decay, no schedule: the optimizer is deliberately
//! the simplest thing that trains, because the object of study is the batch
//! size, not the optimizer.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::path::Path;

/// A labelled dataset: `n` rows of `d` features (row-major) with labels in
/// `[0, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub k: usize,
}

impl Dataset {
    /// Row `i` as a feature slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// Balanced label layout used by the synthetic task: sample `i` belongs
    /// to class `i % k`, so class counts differ by at most one and every
    /// class is present whenever `n >= k`. The layout is structural, which
    /// lets search-only runs reason about shard sizes without ever
    /// materializing features.
    pub fn synthetic_labels(n: usize, k: usize) -> Vec<usize> {
        (0..n).map(|i| i % k).collect()
    }

    /// Generates the synthetic blob task. Class means come first out of the
    /// stream, then per-sample noise, so a train set and a test set built
    /// from streams that agree on the means see the same classes.
    pub fn synthetic<R: Rng>(
        n: usize,
        d: usize,
        k: usize,
        margin: f64,
        means: &[f64],
        rng: &mut R,
    ) -> Dataset {
        assert_eq!(means.len(), k * d, "means must be k x d");
        let _ = margin; // already baked into the means; kept for call-site clarity
        let labels = Dataset::synthetic_labels(n, k);
        let mut features = Vec::with_capacity(n * d);
        for &y in &labels {
            for j in 0..d {
                let noise: f64 = rng.sample(StandardNormal);
                features.push(means[y * d + j] + noise);
            }
        }
        Dataset { features, labels, n, d, k }
    }

    /// Draws the `k * d` class means for the synthetic task: independent
    /// normals scaled by `margin`. Larger margins spread the class centers
    /// further apart relative to the unit sample noise.
    pub fn draw_means<R: Rng>(d: usize, k: usize, margin: f64, rng: &mut R) -> Vec<f64> {
        (0..k * d)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * margin
            })
            .collect()
    }

    /// Loads a dataset from a features CSV (`n` rows of `d` comma-separated
    /// reals, no header) and a labels CSV (`n` integer rows). Class count is
    /// inferred as `max label + 1`; every class below it must occur at least
    /// once, since an absent class would make its weights untrainable.
    pub fn from_csv(features_path: &Path, labels_path: &Path) -> Result<Dataset> {
        let feat_text = std::fs::read_to_string(features_path).map_err(|e| {
            Error::Config(format!("features_csv {}: {e}", features_path.display()))
        })?;
        let label_text = std::fs::read_to_string(labels_path)
            .map_err(|e| Error::Config(format!("labels_csv {}: {e}", labels_path.display())))?;

        let mut features = Vec::new();
        let mut d = 0usize;
        let mut n = 0usize;
        for (lineno, line) in feat_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!(
                            "features_csv line {}: '{}' is not a number",
                            lineno + 1,
                            cell.trim()
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if d == 0 {
                d = row.len();
            } else if row.len() != d {
                return Err(Error::Config(format!(
                    "features_csv line {}: expected {} columns, found {}",
                    lineno + 1,
                    d,
                    row.len()
                )));
            }
            features.extend(row);
            n += 1;
        }
        if n == 0 {
            return Err(Error::Config("features_csv: no data rows".into()));
        }

        let mut labels = Vec::with_capacity(n);
        for (lineno, line) in label_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let y: usize = line.parse().map_err(|_| {
                Error::Config(format!(
                    "labels_csv line {}: '{line}' is not a non-negative integer",
                    lineno + 1
                ))
            })?;
            labels.push(y);
        }
        if labels.len() != n {
            return Err(Error::Config(format!(
                "labels_csv has {} labels for {} feature rows",
                labels.len(),
                n
            )));
        }
        let k = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut present = vec![false; k];
        for &y in &labels {
            present[y] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::Config(format!(
                "labels_csv: class {missing} never occurs (classes must cover 0..{})",
                k - 1
            )));
        }
        Ok(Dataset { features, labels, n, d, k })
    }
}

/// Flat parameter vector for multinomial logistic regression: `k * d` weights
/// row-major, then `k` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(d: usize, k: usize) -> ModelParams {
        ModelParams { values: vec![0.0; k * d + k] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How a dataset is split across clients: symmetric Dirichlet concentration
/// per class, and a floor on shard size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub alpha: f64,
    pub m: usize,
    pub min_shard: usize,
}

/// Splits sample indices across `m` clients, class by class.
///
/// For each class, client proportions are drawn from a symmetric
/// Dirichlet(alpha) (low alpha: skewed, label-heterogeneous shards; high
/// alpha: near-uniform). Proportions become integer counts by largest-
/// remainder rounding so every sample lands somewhere. If rounding luck
/// leaves a shard under `min_shard`, single samples migrate from the largest
/// shard until the floor holds; the migration is deterministic.
pub fn dirichlet_partition<R: Rng>(
    labels: &[usize],
    k: usize,
    spec: &PartitionSpec,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let m = spec.m;
    if m == 0 {
        return Err(Error::Invalid("partition needs at least one client".into()));
    }
    if !(spec.alpha.is_finite() && spec.alpha > 0.0) {
        return Err(Error::Invalid(format!(
            "partition alpha must be positive and finite, got {}",
            spec.alpha
        )));
    }
    if labels.len() < m * spec.min_shard {
        return Err(Error::Invalid(format!(
            "cannot give {} clients at least {} samples each from {} total",
            m,
            spec.min_shard,
            labels.len()
        )));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::Invalid(format!("label {y} outside [0, {k})")));
        }
        by_class[y].push(i);
    }

    let gamma = Gamma::new(spec.alpha, 1.0)
        .map_err(|e| Error::Invalid(format!("bad alpha for Dirichlet draw: {e}")))?;
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); m];
    for class_indices in &by_class {
        let c = class_indices.len();
        if c == 0 {
            continue;
        }
        // Dirichlet via normalized Gamma draws; alpha is shared by all cells.
        let mut props: Vec<f64> = (0..m).map(|_| gamma.sample(rng).max(1e-300)).collect();
        let total: f64 = props.iter().sum();
        for p in &mut props {
            *p /= total;
        }
        // Largest-remainder rounding: floors first, then the leftovers go to
        // the largest fractional parts (ties to the lower client id).
        let targets: Vec<f64> = props.iter().map(|p| p * c as f64).collect();
        let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
        let mut leftover = c - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            let fa = targets[a] - targets[a].floor();
            let fb = targets[b] - targets[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &i in order.iter().take(m) {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            leftover -= 1;
        }
        let mut pos = 0;
        for (i, &cnt) in counts.iter().enumerate() {
            shards[i].extend_from_slice(&class_indices[pos..pos + cnt]);
            pos += cnt;
        }
    }

    // Enforce the shard floor by migrating single samples off the largest
    // shard. Ties break toward the lower client id on both ends.
    loop {
        let (small, small_len) = shards
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.len()))
            .min_by_key(|&(i, len)| (len, i))
            .unwrap();
        if small_len >= spec.min_shard {
            break;
        }
        let big = (0..m)
            .max_by_key(|&i| (shards[i].len(), std::cmp::Reverse(i)))
            .unwrap();
        let moved = shards[big].pop().expect("largest shard cannot be empty");
        shards[small].push(moved);
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(shards)
}

/// Softmax probabilities for one sample, written into `probs`.
/// Stable: logits are shifted by their maximum before exponentiation.
fn softmax_into(params: &ModelParams, x: &[f64], d: usize, k: usize, probs: &mut [f64]) {
    let w = &params.values;
    for (c, p) in probs.iter_mut().enumerate() {
        let mut z = w[k * d + c];
        let row = &w[c * d..(c + 1) * d];
        for (wj, xj) in row.iter().zip(x) {
            z += wj * xj;
        }
        *p = z;
    }
    let zmax = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - zmax).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
}

/// Runs `epochs` passes of mini-batch SGD over `shard` and returns the
/// updated parameters. The shard order is reshuffled every epoch from `rng`;
/// the trailing short batch is kept, its gradient averaged over the samples
/// it actually holds. Fails if parameters stop being finite.
pub fn local_train<R: Rng>(
    params: &ModelParams,
    data: &Dataset,
    shard: &[usize],
    batch: usize,
    lr: f64,
    epochs: usize,
    rng: &mut R,
) -> Result<ModelParams> {
    let (d, k) = (data.d, data.k);
    if params.len() != k * d + k {
        return Err(Error::Invalid(format!(
            "model has {} parameters, task needs {}",
            params.len(),
            k * d + k
        )));
    }
    if batch < 1 || batch > shard.len() {
        return Err(Error::Invalid(format!(
            "batch {batch} outside [1, {}] for this shard",
            shard.len()
        )));
    }
    let mut out = params.clone();
    let mut order: Vec<usize> = shard.to_vec();
    let mut probs = vec![0.0; k];
    let mut grad = vec![0.0; k * d + k];
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                let x = data.row(i);
                softmax_into(&out, x, d, k, &mut probs);
                for c in 0..k {
                    let err = probs[c] - if data.labels[i] == c { 1.0 } else { 0.0 };
                    let g_row = &mut grad[c * d..(c + 1) * d];
                    for (gj, xj) in g_row.iter_mut().zip(x) {
                        *gj += err * xj;
                    }
                    grad[k * d + c] += err;
                }
            }
            let scale = lr / chunk.len() as f64;
            for (w, g) in out.values.iter_mut().zip(&grad) {
                *w -= scale * g;
            }
        }
        if out.values.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite(
                "model parameters left the finite range during local training".into(),
            ));
        }
    }
    Ok(out)
}

/// Sample-count-weighted federated average. The caller fixes the order
/// (ascending client id in the protocol); equal sample counts give the exact
/// arithmetic midpoint.
pub fn fedavg(updates: &[(&ModelParams, usize)]) -> Result<ModelParams> {
    let (first, _) = updates
        .first()
        .ok_or_else(|| Error::Invalid("fedavg over an empty update list".into()))?;
    let len = first.len();
    let total: usize = updates.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(Error::Invalid("fedavg with zero total sample weight".into()));
    }
    let mut out = vec![0.0; len];
    for (params, n) in updates {
        if params.len() != len {
            return Err(Error::Invalid(format!(
                "fedavg update size mismatch: {} vs {}",
                params.len(),
                len
            )));
        }
        let w = *n as f64 / total as f64;
        for (o, v) in out.iter_mut().zip(&params.values) {
            *o += w * v;
        }
    }
    Ok(ModelParams { values: out })
}

/// Mean cross-entropy and top-1 accuracy over a dataset. Argmax ties resolve
/// to the lowest class id, so evaluation is deterministic.
pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<(f64, f64)> {
    if data.n == 0 {
        return Err(Error::Invalid("evaluate on an empty dataset".into()));
    }
    let (d, k) = (data.d, data.k);
    let mut probs = vec![0.0; k];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for i in 0..data.n {
        softmax_into(params, data.row(i), d, k, &mut probs);
        let y = data.labels[i];
        loss -= probs[y].max(1e-300).ln();
        let mut best = 0;
        for c in 1..k {
            if probs[c] > probs[best] {
                best = c;
            }
        }
        if best == y {
            correct += 1;
        }
    }
    let loss = loss / data.n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("evaluation loss is {loss}")));
    }
    Ok((loss, correct as f64 / data.n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};

    fn blob_task(n: usize, seed: u64) -> Dataset {
        let (d, k, margin) = (4, 3, 2.0);
        let mut rng = stream(seed, StreamId::Dataset);
        let means = Dataset::draw_means(d, k, margin, &mut rng);
        Dataset::synthetic(n, d, k, margin, &means, &mut rng)
    }

    #[test]
    fn synthetic_task_is_deterministic_and_balanced() {
        let a = blob_task(300, 9);
        let b = blob_task(300, 9);
        assert_eq!(a, b);
        let c = blob_task(300, 10);
        assert_ne!(a.features, c.features);
        for class in 0..a.k {
            assert_eq!(a.labels.iter().filter(|&&y| y == class).count(), 100);
        }
    }

    #[test]
    fn partition_covers_everything_exactly_once() {
        let labels = Dataset::synthetic_labels(1000, 10);
        let spec = PartitionSpec { alpha: 10.0, m: 7, min_shard: 50 };
        let mut rng = stream(3, StreamId::Partition);
        let shards = dirichlet_partition(&labels, 10, &spec, &mut rng).unwrap();
        assert_eq!(shards.len(), 7);
        let mut seen = vec![false; 1000];
        for shard in &shards {
            assert!(shard.len() >= 50);
            for &i in shard {
                assert!(!seen[i], "index {i} assigned twice");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn partition_is_deterministic() {
        let labels = Dataset::synthetic_labels(500, 5);
        let spec = PartitionSpec { alpha: 0.5, m: 4, min_shard: 10 };
        let a = dirichlet_partition(&labels, 5, &spec, &mut stream(8, StreamId::Partition)).unwrap();
        let b = dirichlet_partition(&labels, 5, &spec, &mut stream(8, StreamId::Partition)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_alpha_approaches_uniform_shards() {
        let labels = Dataset::synthetic_labels(1000, 10);
        let spec = PartitionSpec { alpha: 1e6, m: 10, min_shard: 0 };
        let mut rng = stream(4, StreamId::Partition);
        let shards = dirichlet_partition(&labels, 10, &spec, &mut rng).unwrap();
        for shard in &shards {
            assert!((shard.len() as i64 - 100).abs() <= 10, "shard size {}", shard.len());
        }
    }

    #[test]
    fn small_alpha_skews_and_floor_still_holds() {
        let labels = Dataset::synthetic_labels(1000, 10);
        let spec = PartitionSpec { alpha: 0.05, m: 5, min_shard: 40 };
        let mut rng = stream(5, StreamId::Partition);
        let shards = dirichlet_partition(&labels, 10, &spec, &mut rng).unwrap();
        assert!(shards.iter().all(|s| s.len() >= 40));
        assert_eq!(shards.iter().map(Vec::len).sum::<usize>(), 1000);
    }

    #[test]
    fn infeasible_floor_is_rejected() {
        let labels = Dataset::synthetic_labels(100, 10);
        let spec = PartitionSpec { alpha: 10.0, m: 4, min_shard: 30 };
        let mut rng = stream(6, StreamId::Partition);
        assert!(dirichlet_partition(&labels, 10, &spec, &mut rng).is_err());
    }

    /// Full-batch step on a four-sample, two-class task, checked against the
    /// softmax gradient computed directly from its definition.
    #[test]
    fn full_batch_step_matches_hand_gradient() {
        let data = Dataset {
            features: vec![1.0, 2.0, -1.0, 0.5, 0.0, -1.5, 2.0, 1.0],
            labels: vec![0, 1, 1, 0],
            n: 4,
            d: 2,
            k: 2,
        };
        let w0 = ModelParams { values: vec![0.3, -0.2, 0.1, 0.4, 0.05, -0.05] };
        let lr = 0.7;

        // Independent computation: probabilities straight from exp/sum, the
        // gradient accumulated sample by sample from (p - onehot) * x.
        let mut expect_grad = vec![0.0; 6];
        for s in 0..4 {
            let x = [data.features[2 * s], data.features[2 * s + 1]];
            let z0 = 0.3 * x[0] - 0.2 * x[1] + 0.05;
            let z1 = 0.1 * x[0] + 0.4 * x[1] - 0.05;
            let (e0, e1) = (z0.exp(), z1.exp());
            let p0 = e0 / (e0 + e1);
            let p1 = e1 / (e0 + e1);
            let t = [
                if data.labels[s] == 0 { 1.0 } else { 0.0 },
                if data.labels[s] == 1 { 1.0 } else { 0.0 },
            ];
            expect_grad[0] += (p0 - t[0]) * x[0];
            expect_grad[1] += (p0 - t[0]) * x[1];
            expect_grad[2] += (p1 - t[1]) * x[0];
            expect_grad[3] += (p1 - t[1]) * x[1];
            expect_grad[4] += p0 - t[0];
            expect_grad[5] += p1 - t[1];
        }
        let expected: Vec<f64> = w0
            .values
            .iter()
            .zip(&expect_grad)
            .map(|(w, g)| w - lr * g / 4.0)
            .collect();

        let shard = [0, 1, 2, 3];
        let mut rng = stream(1, StreamId::Shuffle { client: 0, round: 0 });
        let got = local_train(&w0, &data, &shard, 4, lr, 1, &mut rng).unwrap();
        for (g, e) in got.values.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9, "got {g}, expected {e}");
        }
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let data = blob_task(60, 11);
        let shard: Vec<usize> = (0..60).collect();
        let w0 = ModelParams::zeros(data.d, data.k);
        let mut rng = stream(2, StreamId::Shuffle { client: 0, round: 0 });
        let got = local_train(&w0, &data, &shard, 8, 0.0, 3, &mut rng).unwrap();
        assert_eq!(got, w0);
    }

    #[test]
    fn train_rejects_bad_batch_and_model() {
        let data = blob_task(20, 12);
        let shard: Vec<usize> = (0..20).collect();
        let w0 = ModelParams::zeros(data.d, data.k);
        let mut rng = stream(3, StreamId::Shuffle { client: 0, round: 0 });
        assert!(local_train(&w0, &data, &shard, 0, 0.1, 1, &mut rng).is_err());
        assert!(local_train(&w0, &data, &shard, 21, 0.1, 1, &mut rng).is_err());
        let wrong = ModelParams::zeros(data.d + 1, data.k);
        assert!(local_train(&wrong, &data, &shard, 4, 0.1, 1, &mut rng).is_err());
    }

    /// Central finite differences on the shard loss agree with the gradient
    /// implied by one full-batch step.
    #[test]
    fn gradient_matches_finite_differences() {
        let data = blob_task(24, 13);
        let shard: Vec<usize> = (0..24).collect();
        let mut wrng = stream(14, StreamId::Dataset);
        let w0 = ModelParams {
            values: (0..data.k * data.d + data.k)
                .map(|_| {
                    let z: f64 = wrng.sample(StandardNormal);
                    0.3 * z
                })
                .collect(),
        };

        // Independent loss: mean cross-entropy over the shard, log-sum-exp form.
        let loss_at = |params: &ModelParams| -> f64 {
            let (d, k) = (data.d, data.k);
            let mut total = 0.0;
            for &i in &shard {
                let x = data.row(i);
                let logits: Vec<f64> = (0..k)
                    .map(|c| {
                        params.values[k * d + c]
                            + x.iter()
                                .zip(&params.values[c * d..(c + 1) * d])
                                .map(|(xj, wj)| xj * wj)
                                .sum::<f64>()
                    })
                    .collect();
                let zmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = zmax + logits.iter().map(|z| (z - zmax).exp()).sum::<f64>().ln();
                total += lse - logits[data.labels[i]];
            }
            total / shard.len() as f64
        };

        let lr = 0.25;
        let mut rng = stream(4, StreamId::Shuffle { client: 0, round: 0 });
        let stepped = local_train(&w0, &data, &shard, shard.len(), lr, 1, &mut rng).unwrap();
        let analytic: Vec<f64> = w0
            .values
            .iter()
            .zip(&stepped.values)
            .map(|(before, after)| (before - after) / lr)
            .collect();

        let eps = 1e-6;
        for (j, &analytic_j) in analytic.iter().enumerate() {
            let mut plus = w0.clone();
            plus.values[j] += eps;
            let mut minus = w0.clone();
            minus.values[j] -= eps;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            let denom = analytic_j.abs().max(fd.abs()).max(1e-8);
            assert!(
                (analytic_j - fd).abs() / denom < 1e-5,
                "coordinate {j}: analytic {analytic_j} vs finite difference {fd}"
            );
        }
    }

    #[test]
    fn fedavg_weights_by_sample_count() {
        let a = ModelParams { values: vec![0.0] };
        let b = ModelParams { values: vec![4.0] };
        let avg = fedavg(&[(&a, 1), (&b, 3)]).unwrap();
        assert!((avg.values[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn fedavg_equal_weights_hit_the_midpoint() {
        let a = ModelParams { values: vec![1.0, -2.0, 0.3] };
        let b = ModelParams { values: vec![0.0, 6.0, 0.1] };
        let avg = fedavg(&[(&a, 5), (&b, 5)]).unwrap();
        for (got, want) in avg.values.iter().zip([0.5, 2.0, 0.2]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fedavg_rejects_degenerate_input() {
        assert!(fedavg(&[]).is_err());
        let a = ModelParams { values: vec![1.0] };
        let b = ModelParams { values: vec![1.0, 2.0] };
        assert!(fedavg(&[(&a, 1), (&b, 1)]).is_err());
        assert!(fedavg(&[(&a, 0)]).is_err());
    }

    #[test]
    fn zero_model_scores_at_chance() {
        let data = blob_task(300, 15);
        let w = ModelParams::zeros(data.d, data.k);
        let (loss, acc) = evaluate(&w, &data).unwrap();
        // Uniform probabilities: loss is exactly ln(k), argmax ties resolve
        // to class 0, which holds 1/k of the balanced labels.
        assert!((loss - (data.k as f64).ln()).abs() < 1e-12);
        assert!((acc - 1.0 / data.k as f64).abs() < 1e-12);
    }

    #[test]
    fn training_separates_the_blobs() {
        let data = blob_task(600, 16);
        let shard: Vec<usize> = (0..600).collect();
        let mut w = ModelParams::zeros(data.d, data.k);
        let mut rng = stream(5, StreamId::Shuffle { client: 0, round: 0 });
        for _ in 0..5 {
            w = local_train(&w, &data, &shard, 32, 0.1, 1, &mut rng).unwrap();
        }
        let (_, acc) = evaluate(&w, &data).unwrap();
        assert!(acc > 0.9, "accuracy {acc} too low on an easy task");
    }

    #[test]
    fn csv_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let fpath = dir.path().join("x.csv");
        let lpath = dir.path().join("y.csv");
        std::fs::write(&fpath, "1.0,2.0\n3.0,4.0\n-1.0,0.5\n").unwrap();
        std::fs::write(&lpath, "0\n1\n0\n").unwrap();
        let data = Dataset::from_csv(&fpath, &lpath).unwrap();
        assert_eq!((data.n, data.d, data.k), (3, 2, 2));
        assert_eq!(data.row(1), &[3.0, 4.0]);
        assert_eq!(data.labels, vec![0, 1, 0]);

        std::fs::write(&fpath, "1.0,2.0\n3.0\n").unwrap();
        std::fs::write(&lpath, "0\n1\n").unwrap();
        assert!(Dataset::from_csv(&fpath, &lpath).is_err(), "ragged row accepted");

        std::fs::write(&fpath, "1.0,2.0\n3.0,4.0\n").unwrap();
        std::fs::write(&lpath, "0\n2\n").unwrap();
        assert!(Dataset::from_csv(&fpath, &lpath).is_err(), "missing class accepted");
    }
}
