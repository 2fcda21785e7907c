#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "microdata/errors.hpp"
#include "microdata/rng.hpp"
#include "microdata/types.hpp"

namespace microdata::elites {

using CellIndex = std::uint64_t;

/// Regular grid over the unit descriptor cube.
struct GridSpec {
    int descriptor_dim = 6;
    int bins_per_dim = 5;

    std::uint64_t cell_count() const
    {
        std::uint64_t n = 1;
        for (int i = 0; i < descriptor_dim; ++i)
            n *= static_cast<std::uint64_t>(bins_per_dim);
        return n;
    }
};

/// Linear cell index; dimension 0 is the most significant digit.
CellIndex descriptor_to_cell(const Vec& descriptor, const GridSpec& grid);

std::vector<int> cell_coords(CellIndex cell, const GridSpec& grid);

CellIndex coords_to_cell(const std::vector<int>& coords, const GridSpec& grid);

struct Elite {
    Vec params;
    double fitness = 0.0;
    Vec descriptor;
};

enum class InsertOutcome { Inserted, Replaced, Rejected };

/// Best-known solution per descriptor cell. Cells are kept in index order
/// so iteration (and every serialized artifact) is deterministic.
struct EliteArchive {
    GridSpec grid;
    int param_dim = 0;
    std::map<CellIndex, Elite> cells;
    std::uint64_t eval_count = 0;

    std::size_t occupied() const { return cells.size(); }
    double coverage() const
    {
        return static_cast<double>(cells.size()) / static_cast<double>(grid.cell_count());
    }
    double qd_score() const;
    double max_fitness() const; // EmptyArchive if empty
    const Elite& best() const;  // EmptyArchive if empty
};

/// Replace-if-strictly-better insertion; ties keep the occupant.
InsertOutcome archive_insert(EliteArchive& archive, Elite candidate);

/// Isotropic Gaussian mutation clamped to the unit box; sigma = 0 returns
/// the parent unchanged.
Vec variation(const Vec& parent, double sigma, Rng& rng);

/// Evaluator contract: params in [0,1]^d -> (fitness, descriptor in [0,1]^k).
using TaskEvaluator = std::function<std::pair<double, Vec>(const Vec&)>;

struct MapElitesConfig {
    int init_random = 1000;
    double sigma = 0.05;
    int batch_size = 64;
    int threads = 1;               // evaluation threads per batch
    std::uint64_t checkpoint_every = 0; // 0 disables checkpoint stats
};

struct MapElitesStats {
    std::uint64_t evals = 0;
    std::size_t occupied = 0;
    double coverage = 0.0;
    double qd_score = 0.0;
    double max_fitness = 0.0;
};

MapElitesStats archive_stats(const EliteArchive& archive);

/// Batch-synchronous illumination. Candidate generation and the archive
/// merge are sequential in batch order, so runs with the same seed produce
/// identical archives for any thread count. NaN-fitness candidates consume
/// budget but never enter the archive.
EliteArchive map_elites_run(const TaskEvaluator& task, int param_dim, const GridSpec& grid,
                            std::uint64_t budget, const MapElitesConfig& config,
                            std::uint64_t seed,
                            std::vector<MapElitesStats>* checkpoints = nullptr);

/// Archive CSV: header cell_0..cell_{k-1},desc_0..desc_{k-1},fitness,
/// p_0..p_{d-1}; one row per occupied cell in ascending cell order; floats
/// in shortest round-trip form.
void save_archive_csv(const EliteArchive& archive, const std::string& path);
std::string archive_to_csv(const EliteArchive& archive);

EliteArchive load_archive_csv(const std::string& path);
EliteArchive archive_from_csv(const std::string& text);

} // namespace microdata::elites
