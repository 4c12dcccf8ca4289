use critfpp_core::estimators::{
    annulus_count_tail, hierarchy_report, hierarchy_samples, open_circuit_probability, proximity_report, proximity_sample,
    square_count_samples, tail_fit,
};
use critfpp_core::{DistributionSpec, Error, SiteLaw};

fn bern() -> DistributionSpec {
    DistributionSpec::bernoulli(1.0).unwrap()
}

#[test]
fn hierarchies_pass_the_oracle_at_n12() {
    let s = hierarchy_samples(&bern(), 12, 100, 2024).unwrap();
    let r = hierarchy_report(&s);
    assert!(r.pass, "{:#?} {:?}", r.checks, r.flags);
}

#[test]
fn square_counts_rarely_exceed_j_squared() {
    let j = 5;
    let s = square_count_samples(&bern(), j, 0.5, 1, 300, 3).unwrap();
    let over = s.iter().filter(|x| x.two > (j * j) as u64).count() as f64 / s.len() as f64;
    assert!(over < 0.2, "{over}");
    assert!(s.iter().all(|x| x.three <= x.two));
}

#[test]
fn annulus_count_tail_is_log_linear() {
    let tail = annulus_count_tail(&bern(), 4, 2, 3000, 8).unwrap();
    assert_eq!(tail[0], (0, 1.0));
    assert!(tail.windows(2).all(|w| w[1].1 <= w[0].1));
    let (slope, corr) = tail_fit(&tail).expect("at least three tail points");
    assert!(slope < 0.0);
    assert!(corr <= -0.95, "corr {corr}, tail {tail:?}");
}

#[test]
fn planted_open_rings_give_circuits_in_every_annulus() {
    let law = SiteLaw::PlantedRings { defect: 0.1 };
    let r = open_circuit_probability(&bern(), &law, &[2, 3, 4, 5], 200, 4).unwrap();
    for s in &r.scales {
        assert!(s.mean > 0.8 && s.mean < 1.0 + 1e-12, "level {}: {}", s.scale, s.mean);
    }
}

#[test]
fn proximity_event_fades_with_level_on_planted_fields() {
    let law = SiteLaw::PlantedRings { defect: 0.1 };
    let levels = [3, 4, 5, 6];
    let mut samples = Vec::new();
    for i in 0..60 {
        match proximity_sample(&bern(), &law, &levels, 0.5, 1024, 6, i) {
            Ok(p) => samples.push(p),
            Err(Error::InsufficientField { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(samples.len() >= 50, "{}", samples.len());
    let r = proximity_report(&levels, &samples);
    assert!(r.pass, "{:?}", r.scales);
    assert!(r.scales[0].mean > r.scales[3].mean);
}
