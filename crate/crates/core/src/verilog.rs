//! Verilog rendering of a shield as a synchronous Mealy module.
//!
//! `in_bus` bit `k` is variable `k` of the joint alphabet (design inputs
//! first, then design outputs); `out_bus` bit `k` is output variable `k`.

use std::fmt::Write;

use crate::shield::ShieldMachine;

/// `⌈log2 n⌉`; zero for a single state.
pub fn state_width(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

fn ident(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

pub fn export(shield: &ShieldMachine, module: &str) -> String {
    let m = &shield.machine;
    let ni = m.inputs.len();
    let no = m.outputs.len();
    let w = state_width(shield.num_states());
    let mut v = String::new();
    writeln!(v, "// {} states", shield.num_states()).unwrap();
    for (k, n) in m.inputs.names().iter().enumerate() {
        writeln!(v, "// in_bus[{k}] = {n}").unwrap();
    }
    for (k, n) in m.outputs.names().iter().enumerate() {
        writeln!(v, "// out_bus[{k}] = {n}").unwrap();
    }
    writeln!(v, "module {}(clk, rst, in_bus, out_bus);", ident(module)).unwrap();
    v.push_str("  input clk;\n  input rst;\n");
    writeln!(v, "  input [{}:0] in_bus;", ni.max(1) - 1).unwrap();
    writeln!(v, "  output reg [{}:0] out_bus;", no.max(1) - 1).unwrap();
    let sel_width = w + ni;
    if w > 0 {
        writeln!(v, "  reg [{}:0] state;", w - 1).unwrap();
        writeln!(v, "  reg [{}:0] next_state;", w - 1).unwrap();
        v.push_str("\n  always @(*) begin\n");
        v.push_str("    case ({state, in_bus})\n");
    } else {
        v.push_str("\n  always @(*) begin\n");
        v.push_str("    case (in_bus)\n");
    }
    let nj = m.num_inputs();
    for s in 0..shield.num_states() {
        for j in 0..nj {
            let (t, o) = m.step(s, crate::alphabet::Letter(j as u32));
            let sel = (s << ni) | j;
            if w > 0 {
                writeln!(
                    v,
                    "      {sel_width}'d{sel}: begin next_state = {w}'d{t}; out_bus = {no}'d{}; end",
                    o.0
                )
                .unwrap();
            } else {
                writeln!(v, "      {sel_width}'d{sel}: begin out_bus = {no}'d{}; end", o.0).unwrap();
            }
        }
    }
    if w > 0 {
        writeln!(v, "      default: begin next_state = {w}'d0; out_bus = {no}'d0; end").unwrap();
    } else {
        writeln!(v, "      default: begin out_bus = {no}'d0; end").unwrap();
    }
    v.push_str("    endcase\n  end\n");
    if w > 0 {
        v.push_str("\n  always @(posedge clk) begin\n");
        writeln!(v, "    if (rst) state <= {w}'d{};", shield.initial()).unwrap();
        v.push_str("    else state <= next_state;\n  end\n");
    }
    v.push_str("endmodule\n");
    v
}
