//! Multiple imputation of a missing binary trait and Rubin's-rules pooling.
//!
//! Each of the m imputations bootstraps the complete cases, fits a two-class
//! linear discriminant (class-conditional Gaussians with a shared, ridge
//! stabilized covariance) on the seven other traits, and draws every missing
//! cell from the resulting Bernoulli posterior. The bootstrap carries the
//! parameter uncertainty between imputations. A per-coefficient linear model
//! of the target on the predictors is pooled over the m completed tables.

use crate::error::{Error, Result};
use crate::ingest::{TraitName, TraitTable};
use crate::linalg;
use crate::seed;
use ndarray::{Array1, Array2};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputeConfig {
    /// Number of imputations (m ≥ 2).
    pub m: usize,
    pub seed: u64,
    /// Bootstrap redraws allowed when a resample contains one class only.
    pub max_class_retries: usize,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig {
            m: 5,
            seed: 42,
            max_class_retries: 64,
        }
    }
}

/// Rubin's-rules pooled statistics for one scalar estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRow {
    pub term: String,
    /// Pooled estimate Q̄.
    pub est: f64,
    /// Within-imputation variance W.
    pub within: f64,
    /// Between-imputation variance B.
    pub between: f64,
    /// Total variance T = W + (1 + 1/m)·B.
    pub total: f64,
    pub se: f64,
    pub t_stat: f64,
    /// Degrees of freedom ν = (m−1)(1 + 1/r)²; infinite when B = 0.
    pub df: f64,
    pub p_value: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// Number of missing values of the term's own column, when applicable.
    pub nmis: Option<usize>,
    /// Fraction of missing information.
    pub fmi: f64,
    /// Proportion of total variance attributable to missing data,
    /// λ = (B + B/m)/T.
    pub lambda: f64,
}

/// Pooled per-coefficient analysis over the m completed tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSummary {
    pub target: TraitName,
    pub m: usize,
    pub rows: Vec<PooledRow>,
}

/// Pool m point estimates and their within-imputation variances.
pub fn pool_rubin(estimates: &[f64], within_vars: &[f64]) -> Result<PooledRow> {
    let m = estimates.len();
    if m < 2 || within_vars.len() != m {
        return Err(Error::Parameter(
            "pool_rubin: need m >= 2 estimates with matching within-variances".into(),
        ));
    }
    if within_vars.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Parameter(
            "pool_rubin: within-imputation variances must be positive".into(),
        ));
    }
    let mf = m as f64;
    let qbar = estimates.iter().sum::<f64>() / mf;
    let between = estimates.iter().map(|q| (q - qbar).powi(2)).sum::<f64>() / (mf - 1.0);
    let within = within_vars.iter().sum::<f64>() / mf;
    let total = within + (1.0 + 1.0 / mf) * between;
    let lambda = (between + between / mf) / total;
    let se = total.sqrt();
    let t_stat = qbar / se;

    let (df, fmi, p_value, half_width) = if between == 0.0 {
        // r → 0 limit: no between-imputation variance
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let p = 2.0 * (1.0 - normal.cdf(t_stat.abs()));
        (f64::INFINITY, 0.0, p, normal.inverse_cdf(0.975) * se)
    } else {
        let r = (1.0 + 1.0 / mf) * between / within;
        let df = (mf - 1.0) * (1.0 + 1.0 / r).powi(2);
        let fmi = (r + 2.0 / (df + 3.0)) / (r + 1.0);
        if df.is_finite() && df < 1e12 {
            let t_dist = StudentsT::new(0.0, 1.0, df)
                .map_err(|e| Error::Numeric(format!("t distribution: {e}")))?;
            let p = 2.0 * (1.0 - t_dist.cdf(t_stat.abs()));
            (df, fmi, p, t_dist.inverse_cdf(0.975) * se)
        } else {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let p = 2.0 * (1.0 - normal.cdf(t_stat.abs()));
            (df, fmi, p, normal.inverse_cdf(0.975) * se)
        }
    };

    Ok(PooledRow {
        term: String::new(),
        est: qbar,
        within,
        between,
        total,
        se,
        t_stat,
        df,
        p_value,
        lo95: qbar - half_width,
        hi95: qbar + half_width,
        nmis: None,
        fmi,
        lambda,
    })
}

fn predictors_of(target: TraitName) -> Vec<TraitName> {
    TraitName::ALL.iter().copied().filter(|&t| t != target).collect()
}

/// Draw m completed tables for a binary target column.
///
/// Observed cells are copied verbatim; the tables differ only in the cells
/// that were missing. Deterministic for a fixed config.
pub fn impute_binary(
    traits: &TraitTable,
    target: TraitName,
    cfg: &ImputeConfig,
) -> Result<Vec<TraitTable>> {
    if cfg.m < 2 {
        return Err(Error::Parameter("impute: m must be >= 2".into()));
    }
    if !target.is_binary() {
        return Err(Error::Parameter(format!(
            "impute: target `{target}` is not binary"
        )));
    }
    let predictors = predictors_of(target);
    for p in &predictors {
        if traits.missing_count(*p) > 0 {
            return Err(Error::Validation(format!(
                "impute: predictor column `{p}` has missing values; only `{target}` may be incomplete"
            )));
        }
    }

    let target_col = traits.column(target);
    let missing_rows: Vec<usize> = target_col
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.is_none().then_some(i))
        .collect();
    if missing_rows.is_empty() {
        return Ok(vec![traits.clone(); cfg.m]);
    }
    let complete_rows: Vec<usize> = target_col
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.is_some().then_some(i))
        .collect();
    if complete_rows.len() < 20 {
        return Err(Error::Validation(format!(
            "impute: only {} complete cases for `{target}`, need at least 20",
            complete_rows.len()
        )));
    }
    let classes: Vec<u8> = complete_rows
        .iter()
        .map(|&i| target_col[i].unwrap() as u8)
        .collect();
    if classes.iter().all(|&c| c == classes[0]) {
        return Err(Error::Validation(format!(
            "impute: observed `{target}` contains a single class"
        )));
    }

    let p = predictors.len();
    let feature = |row: usize| -> Vec<f64> {
        predictors
            .iter()
            .map(|&t| traits.profiles()[row].trait_value(t).expect("checked complete"))
            .collect()
    };
    let complete_x: Vec<Vec<f64>> = complete_rows.iter().map(|&i| feature(i)).collect();
    let missing_x: Vec<Vec<f64>> = missing_rows.iter().map(|&i| feature(i)).collect();

    let mut tables = Vec::with_capacity(cfg.m);
    for imp in 0..cfg.m {
        let mut rng = seed::rng_from_seed(seed::derive_seed_indexed(cfg.seed, "imputation", imp as u64));

        // bootstrap the complete cases until both classes are present
        let n = complete_rows.len();
        let mut sample: Vec<usize> = Vec::with_capacity(n);
        let mut attempts = 0;
        loop {
            sample.clear();
            sample.extend((0..n).map(|_| rng.gen_range(0..n)));
            let first = classes[sample[0]];
            if sample.iter().any(|&s| classes[s] != first) {
                break;
            }
            attempts += 1;
            if attempts > cfg.max_class_retries {
                return Err(Error::Numeric(format!(
                    "impute: bootstrap produced a single-class resample {attempts} times in a row"
                )));
            }
        }

        let lda = fit_lda(&complete_x, &classes, &sample, p)?;
        let mut table = traits.clone();
        for (k, &row) in missing_rows.iter().enumerate() {
            let posterior = lda.posterior_one(&missing_x[k]);
            let value = if rng.gen::<f64>() < posterior { 1.0 } else { 0.0 };
            table.profile_mut(row).set_trait_value(target, Some(value));
        }
        tables.push(table);
    }
    Ok(tables)
}

struct Lda {
    weights: Vec<f64>,
    bias: f64,
}

impl Lda {
    /// Posterior probability of class 1 under the shared-covariance model.
    fn posterior_one(&self, x: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        crate::regression::sigmoid(z)
    }
}

fn fit_lda(x: &[Vec<f64>], classes: &[u8], sample: &[usize], p: usize) -> Result<Lda> {
    let mut mean0 = vec![0.0; p];
    let mut mean1 = vec![0.0; p];
    let mut n0 = 0usize;
    let mut n1 = 0usize;
    for &s in sample {
        let (mean, n) = if classes[s] == 1 {
            (&mut mean1, &mut n1)
        } else {
            (&mut mean0, &mut n0)
        };
        for (acc, v) in mean.iter_mut().zip(&x[s]) {
            *acc += v;
        }
        *n += 1;
    }
    for v in mean0.iter_mut() {
        *v /= n0 as f64;
    }
    for v in mean1.iter_mut() {
        *v /= n1 as f64;
    }

    let mut cov = Array2::<f64>::zeros((p, p));
    for &s in sample {
        let mean = if classes[s] == 1 { &mean1 } else { &mean0 };
        for a in 0..p {
            let da = x[s][a] - mean[a];
            for b in 0..=a {
                cov[[a, b]] += da * (x[s][b] - mean[b]);
            }
        }
    }
    let denom = (sample.len() - 2) as f64;
    for a in 0..p {
        for b in 0..=a {
            cov[[a, b]] /= denom;
            cov[[b, a]] = cov[[a, b]];
        }
    }
    // ridge keeps collinear predictors invertible
    let ridge = 1e-8 * cov.diag().sum() / p as f64;
    for a in 0..p {
        cov[[a, a]] += ridge;
    }

    let diff = Array1::from_iter(mean1.iter().zip(&mean0).map(|(a, b)| a - b));
    let weights = linalg::solve_spd(&cov, &diff)?;
    let mid: f64 = weights
        .iter()
        .zip(mean1.iter().zip(&mean0))
        .map(|(w, (m1, m0))| w * (m1 + m0) / 2.0)
        .sum();
    let prior_log_odds = (n1 as f64 / n0 as f64).ln();
    Ok(Lda {
        weights: weights.to_vec(),
        bias: prior_log_odds - mid,
    })
}

/// Fit the linear model of the target on intercept + the seven other traits
/// on every completed table and pool each coefficient.
///
/// `original` supplies the per-column missing counts reported as `nmis`.
pub fn pooled_analysis(
    original: &TraitTable,
    tables: &[TraitTable],
    target: TraitName,
) -> Result<PooledSummary> {
    if tables.len() < 2 {
        return Err(Error::Parameter("pooled_analysis: need at least 2 tables".into()));
    }
    let predictors = predictors_of(target);
    let p = predictors.len() + 1;
    let mut estimates: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut variances: Vec<Vec<f64>> = vec![Vec::new(); p];

    for table in tables {
        let n = table.len();
        if n <= p {
            return Err(Error::Parameter(
                "pooled_analysis: more coefficients than observations".into(),
            ));
        }
        let mut x = Array2::<f64>::zeros((n, p));
        let mut y = Array1::<f64>::zeros(n);
        for (i, profile) in table.profiles().iter().enumerate() {
            x[[i, 0]] = 1.0;
            for (k, t) in predictors.iter().enumerate() {
                x[[i, k + 1]] = profile.trait_value(*t).ok_or_else(|| {
                    Error::Validation(format!("pooled_analysis: `{t}` missing for `{}`", profile.user_id))
                })?;
            }
            y[i] = profile.trait_value(target).ok_or_else(|| {
                Error::Validation(format!(
                    "pooled_analysis: target `{target}` missing for `{}` in a completed table",
                    profile.user_id
                ))
            })?;
        }
        let gram = x.t().dot(&x);
        let rhs = x.t().dot(&y);
        let theta = linalg::solve_spd(&gram, &rhs)?;
        let resid = &y - &x.dot(&theta);
        let sigma2 = resid.iter().map(|r| r * r).sum::<f64>() / (n - p) as f64;
        let inv_diag = linalg::spd_inverse_diag(&gram)?;
        for k in 0..p {
            estimates[k].push(theta[k]);
            variances[k].push(sigma2 * inv_diag[k]);
        }
    }

    let mut rows = Vec::with_capacity(p);
    for k in 0..p {
        let mut row = pool_rubin(&estimates[k], &variances[k])?;
        if k == 0 {
            row.term = "(Intercept)".into();
            row.nmis = None;
        } else {
            let t = predictors[k - 1];
            row.term = t.column().into();
            row.nmis = Some(original.missing_count(t));
        }
        rows.push(row);
    }
    Ok(PooledSummary {
        target,
        m: tables.len(),
        rows,
    })
}

/// CSV rendering of the pooled summary with the conventional column set.
pub fn format_pooled_csv(summary: &PooledSummary) -> String {
    let mut out = String::from("term,est,se,t,df,Pr,lo95,hi95,nmis,fmi,lambda\n");
    for r in &summary.rows {
        let df = if r.df.is_finite() {
            format!("{}", r.df)
        } else {
            "Inf".to_string()
        };
        let nmis = r.nmis.map(|n| n.to_string()).unwrap_or_else(|| "NA".into());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.term, r.est, r.se, r.t_stat, df, r.p_value, r.lo95, r.hi95, nmis, r.fmi, r.lambda
        ));
    }
    out
}

/// Majority vote across the m completed tables, used by the optional
/// averaging mode. Ties resolve to 1 (posterior mass at exactly one half).
pub fn majority_vote(tables: &[TraitTable], target: TraitName) -> Result<TraitTable> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Parameter("majority_vote: no tables".into()))?;
    let mut result = first.clone();
    let n = first.len();
    for row in 0..n {
        let mut ones = 0usize;
        for table in tables {
            if table.profiles()[row].trait_value(target) == Some(1.0) {
                ones += 1;
            }
        }
        let value = if 2 * ones >= tables.len() { 1.0 } else { 0.0 };
        result.profile_mut(row).set_trait_value(target, Some(value));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::UserProfile;

    #[test]
    fn pool_rubin_hand_example() {
        // Q̄ = 2, W = 1, B = 2, T = 4, se = 2, t = 1, λ = 0.75, r = 3,
        // ν = 16/9, fmi = 147/172
        let row = pool_rubin(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert!((row.est - 2.0).abs() < 1e-12);
        assert!((row.within - 1.0).abs() < 1e-12);
        assert!((row.between - 2.0).abs() < 1e-12);
        assert!((row.total - 4.0).abs() < 1e-12);
        assert!((row.se - 2.0).abs() < 1e-12);
        assert!((row.t_stat - 1.0).abs() < 1e-12);
        assert!((row.lambda - 0.75).abs() < 1e-12);
        assert!((row.df - 16.0 / 9.0).abs() < 1e-12);
        assert!((row.fmi - 147.0 / 172.0).abs() < 1e-12);
        assert!(row.lo95 <= row.est && row.est <= row.hi95);
    }

    #[test]
    fn pool_rubin_no_between_variance() {
        let row = pool_rubin(&[2.0, 2.0, 2.0], &[0.5, 0.7, 0.6]).unwrap();
        assert_eq!(row.between, 0.0);
        assert_eq!(row.lambda, 0.0);
        assert_eq!(row.fmi, 0.0);
        assert!((row.total - row.within).abs() < 1e-15);
        assert!(row.df.is_infinite());
    }

    #[test]
    fn pooling_is_order_invariant() {
        let a = pool_rubin(&[0.3, 1.1, -0.4], &[0.2, 0.5, 0.3]).unwrap();
        let b = pool_rubin(&[1.1, -0.4, 0.3], &[0.5, 0.3, 0.2]).unwrap();
        assert!((a.est - b.est).abs() < 1e-15);
        assert!((a.total - b.total).abs() < 1e-15);
        assert!((a.fmi - b.fmi).abs() < 1e-15);
    }

    #[test]
    fn lambda_never_exceeds_fmi() {
        let mut rng = seed::rng_from_seed(77);
        for _ in 0..1000 {
            let m = rng.gen_range(2..8);
            let est: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let wv: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..2.0)).collect();
            let row = pool_rubin(&est, &wv).unwrap();
            assert!(
                row.lambda <= row.fmi + 1e-12,
                "lambda {} > fmi {}",
                row.lambda,
                row.fmi
            );
            assert!((0.0..1.0).contains(&row.lambda));
            let identity = (row.between + row.between / m as f64) / row.total;
            assert!((row.lambda - identity).abs() < 1e-12);
        }
    }

    fn profile(id: &str, political: Option<u8>, x: f64, y: f64) -> UserProfile {
        UserProfile {
            user_id: id.to_string(),
            gender: Some(if id.len() % 2 == 0 { 1 } else { 0 }),
            age: Some(20.0 + x.abs()),
            political,
            ope: Some(x),
            con: Some(y),
            ext: Some(x * 0.5 - y * 0.25),
            agr: Some(y * 0.5 + 0.1),
            neu: Some(-x * 0.3),
        }
    }

    fn toy_table(missing: usize) -> TraitTable {
        // two clear clusters in (ope, con): class 0 near (-1,-1), class 1 near (1,1)
        let mut rows = Vec::new();
        let mut rng = seed::rng_from_seed(5);
        for i in 0..30 {
            let cls = i % 2;
            let jx: f64 = rng.gen_range(-0.3..0.3);
            let jy: f64 = rng.gen_range(-0.3..0.3);
            let (cx, cy) = if cls == 1 { (1.0, 1.0) } else { (-1.0, -1.0) };
            rows.push(profile(&format!("u{i:03}"), Some(cls as u8), cx + jx, cy + jy));
        }
        for i in 0..missing {
            let jx: f64 = rng.gen_range(-0.2..0.2);
            rows.push(profile(&format!("m{i:03}"), None, 1.0 + jx, 1.0 + jx));
        }
        TraitTable::new(rows).unwrap()
    }

    #[test]
    fn zero_missing_returns_identical_copies() {
        let t = toy_table(0);
        let cfg = ImputeConfig::default();
        let tables = impute_binary(&t, TraitName::Political, &cfg).unwrap();
        assert_eq!(tables.len(), cfg.m);
        for table in tables {
            assert_eq!(table, t);
        }
    }

    #[test]
    fn separable_signature_imputes_one() {
        let t = toy_table(3);
        let tables = impute_binary(&t, TraitName::Political, &ImputeConfig::default()).unwrap();
        for table in &tables {
            for p in table.profiles() {
                if p.user_id.starts_with('m') {
                    assert_eq!(p.political, Some(1), "missing row near class-1 cluster");
                }
            }
        }
    }

    #[test]
    fn observed_cells_never_altered() {
        let t = toy_table(4);
        let tables = impute_binary(&t, TraitName::Political, &ImputeConfig::default()).unwrap();
        for table in &tables {
            for (orig, new) in t.profiles().iter().zip(table.profiles()) {
                if orig.political.is_some() {
                    assert_eq!(orig, new);
                } else {
                    let mut stripped = new.clone();
                    stripped.political = None;
                    assert_eq!(&stripped, orig);
                }
            }
        }
    }

    #[test]
    fn imputation_is_deterministic() {
        let t = toy_table(5);
        let cfg = ImputeConfig { m: 3, seed: 9, ..Default::default() };
        let a = impute_binary(&t, TraitName::Political, &cfg).unwrap();
        let b = impute_binary(&t, TraitName::Political, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn midpoint_posterior_draws_are_balanced() {
        // symmetric clusters, missing row exactly between them: posterior 1/2
        let mut rows = Vec::new();
        for i in 0..12 {
            let off = (i % 3) as f64 * 0.2 - 0.2;
            rows.push(profile(&format!("a{i:02}"), Some(0), -1.0, off));
            rows.push(profile(&format!("b{i:02}"), Some(1), 1.0, off));
        }
        rows.push(profile("mid", None, 0.0, 0.0));
        let t = TraitTable::new(rows).unwrap();
        let cfg = ImputeConfig { m: 10_000, seed: 31, ..Default::default() };
        let tables = impute_binary(&t, TraitName::Political, &cfg).unwrap();
        let ones: usize = tables
            .iter()
            .filter(|tab| tab.get("mid").unwrap().political == Some(1))
            .count();
        let freq = ones as f64 / cfg.m as f64;
        assert!((freq - 0.5).abs() < 0.02, "empirical frequency {freq}");
    }

    #[test]
    fn single_observed_class_is_error() {
        let mut rows: Vec<UserProfile> = (0..25)
            .map(|i| profile(&format!("u{i:02}"), Some(1), i as f64 * 0.1, 0.0))
            .collect();
        rows.push(profile("miss", None, 0.5, 0.0));
        let t = TraitTable::new(rows).unwrap();
        assert!(impute_binary(&t, TraitName::Political, &ImputeConfig::default()).is_err());
    }

    #[test]
    fn incomplete_predictor_is_error() {
        let mut t = toy_table(2);
        t.profile_mut(0).ope = None;
        assert!(matches!(
            impute_binary(&t, TraitName::Political, &ImputeConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    fn spread_table(n: usize, missing: usize) -> TraitTable {
        let mut rng = seed::rng_from_seed(17);
        let mut rows = Vec::new();
        for i in 0..n + missing {
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_range(-1.5..1.5);
            let ope = draw(&mut rng);
            let political = if i < n {
                Some(if ope + 0.3 * draw(&mut rng) > 0.0 { 1 } else { 0 })
            } else {
                None
            };
            rows.push(UserProfile {
                user_id: format!("s{i:03}"),
                gender: Some(rng.gen_range(0..2) as u8),
                age: Some(rng.gen_range(18.0..60.0)),
                political,
                ope: Some(ope),
                con: Some(draw(&mut rng)),
                ext: Some(draw(&mut rng)),
                agr: Some(draw(&mut rng)),
                neu: Some(draw(&mut rng)),
            });
        }
        TraitTable::new(rows).unwrap()
    }

    #[test]
    fn pooled_analysis_has_intercept_and_seven_predictors() {
        let t = spread_table(60, 6);
        let tables = impute_binary(&t, TraitName::Political, &ImputeConfig::default()).unwrap();
        let summary = pooled_analysis(&t, &tables, TraitName::Political).unwrap();
        assert_eq!(summary.rows.len(), 8);
        assert_eq!(summary.rows[0].term, "(Intercept)");
        assert_eq!(summary.rows[0].nmis, None);
        assert_eq!(summary.rows[1].term, "gender");
        assert_eq!(summary.rows[1].nmis, Some(0));
        let csv = format_pooled_csv(&summary);
        assert!(csv.starts_with("term,est,se,t,df,Pr,lo95,hi95,nmis,fmi,lambda"));
        assert_eq!(csv.lines().count(), 9);
    }
}
