use nalgebra::Vector3;
use tedhr_core::alloc::{build_allocation, VehicleParams};
use tedhr_core::dynamics::hover_input;

fn main() {
    let p = VehicleParams::default();
    let a = build_allocation(&p).unwrap();
    let u_hover = hover_input(&a, &p);
    println!("u_max = {:.3e}, hover u = {:.3e} ({:.1}% of max)", p.u_max(), u_hover[0], 100.0*u_hover[0]/p.u_max());
    for (name, f, tau) in [
        ("Fx 1N", Vector3::x(), Vector3::zeros()),
        ("Fy 1N", Vector3::y(), Vector3::zeros()),
        ("Fz 1N", Vector3::z(), Vector3::zeros()),
        ("Tx 1Nm", Vector3::zeros(), Vector3::x()),
        ("Ty 1Nm", Vector3::zeros(), Vector3::y()),
        ("Tz 1Nm", Vector3::zeros(), Vector3::z()),
    ] {
        let u = a.input_for_wrench(&f, &tau);
        let max = u.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        println!("{name}: max |Δu| = {:.3e}  ({:.1}% of u_max) headroom_N = {:.1}", max, 100.0*max/p.u_max(), (p.u_max()-u_hover[0])/max);
    }
}
