"""Wang tiling rules and the affine-map tile construction."""
from .wang import (TilingCheck, TilingRule, SearchResult, ReducedHamiltonian, is_valid_tiling,
                   periodic_tiling_search, rule_to_hamiltonian)
from .kari import (KariSystem, Tile, WitnessPoint, alphabet_contains, beatty_row, circle_point,
                   curve_point, immortal, is_valid_kari_grid, kari_alphabet, kari_left_vector_set,
                   kari_rows, kari_rule, kari_strip_tiling, orbit, witnesses)
