#pragma once

namespace shiftnmf {

// Selects between the OpenMP kernels and their single-threaded reference run.
// Every kernel produces bitwise-identical output under both policies: work is
// split over independent output columns and reductions are summed serially.
enum class Exec { serial, parallel };

}  // namespace shiftnmf
