use hypmass_core::charges::*;
use hypmass_core::clifford::CliffordRep;
use hypmass_core::models;
fn main() {
    let opts = XiOptions::default();
    for mbar in [0.1, 0.5] {
        let data = models::schwarzschild_ads_data(3, mbar).unwrap();
        let rep = CliffordRep::new(3).unwrap();
        let report = mass_vector(&data, &rep, &opts).unwrap();
        println!("mbar={mbar}: m0={:.8}  ratio={:.6}", report.m_mu[0], report.m_mu[0]/mbar);
        let diag = &report.charges[0];
        println!("  per_radius: {:?}", diag.charge.per_radius.iter().map(|x| x.1).collect::<Vec<_>>());
        println!("  fit: {:?}", diag.charge.fit);
    }
}
