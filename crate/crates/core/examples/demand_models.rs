//! The log-linear demand law against its linearization around r = 1.

use crowdasm::demand::{expected_demand, linearized_coefficient, linearized_demand, DemandParams};
use crowdasm::domain::DemandForm;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DemandParams {
        alpha1: 1.0,
        alpha2: -0.5,
        alpha3: 0.25,
        form: DemandForm::Exact,
    };
    println!("reference point: r=0.81, n+=16, p=2 -> {:.4}", expected_demand(2.0, 0.81, 16, &params)?);
    println!("beta(n+=16) = {:.4}", linearized_coefficient(16, &params));
    println!("    r    exact   linear  clamped");
    for r in [0.2, 0.4, 0.6, 0.8, 0.95] {
        let exact = expected_demand(2.0, r, 16, &params)?;
        let lin = linearized_demand(2.0, r, 16, &params)?;
        println!("{r:>5.2}  {exact:>7.3}  {:>7.3}  {}", lin.value, lin.clamped);
    }
    Ok(())
}
