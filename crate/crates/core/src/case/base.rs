use super::{NetworkCase, PerUnit};
use crate::error::{Error, Result};

pub(super) fn to_system_base(case: &NetworkCase) -> Result<NetworkCase> {
    if case.per_unit == PerUnit::System {
        return Ok(case.clone());
    }
    let sbase = case.system_base_mva;
    if !(sbase > 0.0) {
        return Err(Error::InvalidInput(format!(
            "system_base_mva must be positive, got {sbase}"
        )));
    }
    let mut out = case.clone();

    for (i, m) in out.machines.iter_mut().enumerate() {
        let k = ratio(m.rating_mva, sbase, "machine", i)?;
        m.xd_prime /= k;
        m.h *= k;
        m.d *= k;
        m.p_set *= k;
        if let Some(g) = m.governor.as_mut() {
            g.r /= k;
        }
    }

    for v in out.vscs.iter_mut() {
        let k = ratio(v.rating_mva, sbase, "VSC", v.id)?;
        v.r_s /= k;
        v.x_s /= k;
        v.p_max *= k;
        v.q_max *= k;
        v.i_max *= k;
        v.p_set0 *= k;
        v.q_set0 *= k;
        // p_loss = a + b i + c i^2 with i and p on the device base.
        v.loss_a *= k;
        v.loss_c_rec /= k;
        v.loss_c_inv /= k;
        v.k_dc /= k;
    }

    // DC grid: physical units to pu with Z_b = V_b^2 / S_b. Capacitances
    // and inductances become time constants in seconds.
    let base_of = |id: usize| -> Result<f64> {
        let bus = &case.dc_buses[case.dc_bus_index(id)?];
        if !(bus.v_base_kv > 0.0) {
            return Err(Error::InvalidInput(format!(
                "DC bus {id}: v_base_kv must be positive"
            )));
        }
        Ok(bus.v_base_kv * bus.v_base_kv / sbase)
    };
    for bus in out.dc_buses.iter_mut() {
        let zb = base_of(bus.id)?;
        bus.c_vsc = bus.c_vsc * 1e-6 * zb;
    }
    for line in out.dc_lines.iter_mut() {
        let zb = base_of(line.from)?;
        line.r_dc /= zb;
        line.l_dc = line.l_dc * 1e-3 / zb;
        line.c_cc = line.c_cc * 1e-6 * zb;
    }

    out.per_unit = PerUnit::System;
    Ok(out)
}

fn ratio(rating: f64, sbase: f64, kind: &str, id: usize) -> Result<f64> {
    if rating > 0.0 {
        Ok(rating / sbase)
    } else {
        Err(Error::InvalidInput(format!(
            "{kind} {id}: rating_mva must be positive, got {rating}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use crate::case::bundled;
    use crate::case::PerUnit;

    #[test]
    fn converts_converter_quantities() {
        let mut case = bundled::two_area_mtdc();
        case.vscs[0].rating_mva = 1000.0;
        case.vscs[0].p_max = 1.0;
        case.vscs[0].x_s = 0.17;
        case.system_base_mva = 100.0;
        let sys = case.to_system_base().unwrap();
        assert!((sys.vscs[0].p_max - 10.0).abs() < 1e-12);
        assert!((sys.vscs[0].x_s - 0.017).abs() < 1e-12);
        assert_eq!(sys.per_unit, PerUnit::System);
    }

    #[test]
    fn idempotent() {
        let sys = bundled::two_area_mtdc().to_system_base().unwrap();
        assert_eq!(sys.to_system_base().unwrap(), sys);
    }

    #[test]
    fn rejects_zero_rating() {
        let mut case = bundled::two_area_mtdc();
        case.machines[1].rating_mva = 0.0;
        assert!(case.to_system_base().is_err());
        let mut case = bundled::two_area_mtdc();
        case.vscs[2].rating_mva = -5.0;
        assert!(case.to_system_base().is_err());
    }

    #[test]
    fn dc_bus_capacitance_aggregates_half_line_shunts() {
        // 193.21 uF converter + two incident lines of 1.79 uF each.
        let case = bundled::two_area_mtdc();
        for c in case.dc_bus_capacitance() {
            assert!((c - 195.0).abs() < 1e-9, "{c}");
        }
    }
}
