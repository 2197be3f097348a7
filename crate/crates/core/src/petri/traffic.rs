use super::PetriNet;

/// Signal groups (lane pairs) of the 4-way junction, in action-index order.
pub const GROUPS: [&str; 4] = ["swne", "we", "sn", "wnes"];

/// The traffic-light constraint net.
///
/// Each group has a `Red_g` place (initially marked) and a `Green_g` place.
/// `RtoG_g` consumes `Red_g` and the shared `Safe` token and produces `Green_g`;
/// `GtoR_g` returns both. Since `Safe` holds one token, at most one group can
/// be green at a time.
///
/// Place order: `Red_g, Green_g` per group, then `Safe`.
/// Transition order: all `RtoG_g`, then all `GtoR_g`.
pub fn traffic_light_net() -> PetriNet {
    let mut b = PetriNet::builder();
    for g in GROUPS {
        b = b.place(format!("Red_{g}"), 1).place(format!("Green_{g}"), 0);
    }
    b = b.place("Safe", 1);
    for g in GROUPS {
        b = b.transition(format!("RtoG_{g}"));
    }
    for g in GROUPS {
        b = b.transition(format!("GtoR_{g}"));
    }
    for g in GROUPS {
        let (red, green) = (format!("Red_{g}"), format!("Green_{g}"));
        let (rtog, gtor) = (format!("RtoG_{g}"), format!("GtoR_{g}"));
        b = b
            .arc(red.clone(), rtog.clone(), 1)
            .arc(rtog.clone(), green.clone(), 1)
            .arc(green, gtor.clone(), 1)
            .arc(gtor.clone(), red, 1)
            .arc(gtor, "Safe", 1)
            .arc("Safe", rtog, 1);
    }
    b.build().expect("builtin traffic-light net is well formed")
}
