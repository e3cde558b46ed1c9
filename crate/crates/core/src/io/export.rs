use crate::bcnn::PredictiveDistribution;
use crate::ssvs::GibbsTrace;

/// One row per ensemble member of every image:
/// `image,member,p0,...,p{K-1}`.
pub fn distributions_csv(dists: &[PredictiveDistribution]) -> String {
    let k = dists.first().map_or(0, |d| d.mean.len());
    let mut s = String::from("image,member");
    for c in 0..k {
        s.push_str(&format!(",p{c}"));
    }
    s.push('\n');
    for (i, d) in dists.iter().enumerate() {
        for (r, row) in d.samples.iter().enumerate() {
            s.push_str(&format!("{i},{r}"));
            for p in row {
                s.push_str(&format!(",{p}"));
            }
            s.push('\n');
        }
    }
    s
}

/// `iter,beta0..beta_p,gamma1..gamma_p`, iterations counted from the
/// first stored draw after burn-in.
pub fn trace_csv(trace: &GibbsTrace) -> String {
    let k = trace.betas.first().map_or(0, Vec::len);
    let mut s = String::from("iter");
    (0..k).for_each(|j| s.push_str(&format!(",beta{j}")));
    (1..k).for_each(|j| s.push_str(&format!(",gamma{j}")));
    s.push('\n');
    for (t, (b, g)) in trace.betas.iter().zip(&trace.gammas).enumerate() {
        s.push_str(&(trace.burn_in + t).to_string());
        b.iter().for_each(|v| s.push_str(&format!(",{v}")));
        g.iter().for_each(|&v| s.push_str(if v { ",1" } else { ",0" }));
        s.push('\n');
    }
    s
}
