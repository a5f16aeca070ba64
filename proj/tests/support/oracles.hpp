#ifndef TOPOLAT_TEST_ORACLES_HPP
#define TOPOLAT_TEST_ORACLES_HPP

#include "topolat/invariants.hpp"

namespace topolat::oracle {

// Fukui-Hatsugai plaquette field-strength Chern number of the bands below
// E_F: sum over plaquettes of the argument of the link-overlap product,
// divided by 2*pi. Independent of the derivation-based cocycle path.
double fukui_hatsugai_chern(const BlochMap& bm, double E_F, int n);

// Dirac-point separation formula for the honeycomb model with intra-cell
// hopping lambda: the k_2-measure of slices whose winding is 1.
double honeycomb_winding_formula(double lambda);

// random finite-range profile with hermitian-symmetric coefficients
OperatorProfile random_hermitian_profile(int d, int N, int range,
                                         uint64_t seed);
// random finite-range profile with no symmetry
OperatorProfile random_profile(int d, int N, int range, uint64_t seed);

// random partial isometry of size (rank+coker) x (rank+ker) with prescribed
// kernel/cokernel dimensions
Matrix random_partial_isometry(int rank, int ker, int coker, uint64_t seed);

}  // namespace topolat::oracle

#endif
