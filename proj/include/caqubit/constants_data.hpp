#pragma once

// Default constants, kept byte-identical to data/ca43_constants.ini (checked by
// the atomic test suite).

namespace caqubit {

inline constexpr const char* kDefaultConstantsText = R"ini(# 43Ca+ atomic constants.
#
# Units: frequencies in Hz, lifetimes in s, mass in unified atomic mass units.
# g-factors follow H_Z = mu_B (g_J J_z + g_I I_z) B, so g_I is positive for a
# nucleus with a negative magnetic moment (43Ca: mu_I = -1.3173 mu_N).
#
# hyperfine_A and hyperfine_B are signed (both negative for 43Ca+). Every other
# entry must be positive. The loader reports the offending line otherwise.
#
# D- and P-level hyperfine constants only set absolute line positions in the
# S1/2 <-> D5/2 table; Zeeman spacings and coupling strengths do not use them.

[meta]
version = ca43-2024.1

[ion]
mass_u = 42.958218          # 43Ca atom minus one electron
nuclear_spin = 3.5
g_I = 2.04976e-4

[S1_2]
g_J = 2.00225664
hfs_splitting = 3225608286.4    # |E(F=3) - E(F=4)| at zero field
hfs_inverted = true             # F=4 lies below F=3 (negative A)

[P1_2]
g_J = 0.66580
hyperfine_A = -145.4e6
lifetime = 7.098e-9

[P3_2]
g_J = 1.33410
hyperfine_A = -31.4e6
hyperfine_B = -6.9e6
lifetime = 6.924e-9

[D3_2]
g_J = 0.79975
hyperfine_A = -47.3e6
hyperfine_B = -3.7e6
lifetime = 1.176

[D5_2]
g_J = 1.2003340
hyperfine_A = -3.8931e6
hyperfine_B = -4.241e6
lifetime = 1.168
)ini";

}  // namespace caqubit
