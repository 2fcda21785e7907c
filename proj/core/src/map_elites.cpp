#include "microdata/map_elites.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "microdata/csv.hpp"
#include "microdata/parallel.hpp"

namespace microdata::elites {

CellIndex descriptor_to_cell(const Vec& descriptor, const GridSpec& grid)
{
    if (descriptor.size() != grid.descriptor_dim)
        throw DimensionMismatch("descriptor_to_cell: wrong descriptor dimension");
    if (!all_finite(descriptor))
        throw NonFiniteInput("descriptor_to_cell: non-finite descriptor");

    CellIndex index = 0;
    for (int i = 0; i < grid.descriptor_dim; ++i) {
        const double v = std::min(std::max(descriptor[i], 0.0), 1.0);
        int bin = static_cast<int>(std::floor(v * grid.bins_per_dim));
        if (bin >= grid.bins_per_dim)
            bin = grid.bins_per_dim - 1; // v == 1.0 maps to the top bin
        index = index * static_cast<CellIndex>(grid.bins_per_dim) + static_cast<CellIndex>(bin);
    }
    return index;
}

std::vector<int> cell_coords(CellIndex cell, const GridSpec& grid)
{
    std::vector<int> coords(grid.descriptor_dim);
    for (int i = grid.descriptor_dim - 1; i >= 0; --i) {
        coords[i] = static_cast<int>(cell % static_cast<CellIndex>(grid.bins_per_dim));
        cell /= static_cast<CellIndex>(grid.bins_per_dim);
    }
    return coords;
}

CellIndex coords_to_cell(const std::vector<int>& coords, const GridSpec& grid)
{
    if (static_cast<int>(coords.size()) != grid.descriptor_dim)
        throw DimensionMismatch("coords_to_cell: wrong coordinate count");
    CellIndex index = 0;
    for (int i = 0; i < grid.descriptor_dim; ++i) {
        if (coords[i] < 0 || coords[i] >= grid.bins_per_dim)
            throw std::invalid_argument("coords_to_cell: bin out of range");
        index = index * static_cast<CellIndex>(grid.bins_per_dim) + static_cast<CellIndex>(coords[i]);
    }
    return index;
}

double EliteArchive::qd_score() const
{
    double total = 0.0;
    for (const auto& [cell, elite] : cells)
        total += elite.fitness;
    return total;
}

double EliteArchive::max_fitness() const
{
    return best().fitness;
}

const Elite& EliteArchive::best() const
{
    if (cells.empty())
        throw EmptyArchive("archive is empty");
    const Elite* best = nullptr;
    for (const auto& [cell, elite] : cells)
        if (!best || elite.fitness > best->fitness)
            best = &elite;
    return *best;
}

InsertOutcome archive_insert(EliteArchive& archive, Elite candidate)
{
    if (!std::isfinite(candidate.fitness) || !all_finite(candidate.params)
        || !all_finite(candidate.descriptor))
        throw NonFiniteInput("archive_insert: non-finite candidate");

    const CellIndex cell = descriptor_to_cell(candidate.descriptor, archive.grid);
    auto it = archive.cells.find(cell);
    if (it == archive.cells.end()) {
        archive.cells.emplace(cell, std::move(candidate));
        return InsertOutcome::Inserted;
    }
    if (it->second.fitness >= candidate.fitness)
        return InsertOutcome::Rejected;
    it->second = std::move(candidate);
    return InsertOutcome::Replaced;
}

Vec variation(const Vec& parent, double sigma, Rng& rng)
{
    Vec child(parent.size());
    for (int i = 0; i < parent.size(); ++i)
        child[i] = parent[i] + sigma * rng.normal();
    return clamp_unit(std::move(child));
}

MapElitesStats archive_stats(const EliteArchive& archive)
{
    MapElitesStats s;
    s.evals = archive.eval_count;
    s.occupied = archive.occupied();
    s.coverage = archive.coverage();
    s.qd_score = archive.qd_score();
    s.max_fitness = archive.cells.empty() ? 0.0 : archive.max_fitness();
    return s;
}

EliteArchive map_elites_run(const TaskEvaluator& task, int param_dim, const GridSpec& grid,
                            std::uint64_t budget, const MapElitesConfig& config,
                            std::uint64_t seed,
                            std::vector<MapElitesStats>* checkpoints)
{
    if (param_dim < 1)
        throw std::invalid_argument("map_elites_run: param_dim must be >= 1");
    if (budget < static_cast<std::uint64_t>(config.init_random))
        throw std::invalid_argument("map_elites_run: budget below the random init phase");

    EliteArchive archive;
    archive.grid = grid;
    archive.param_dim = param_dim;

    Rng rng(seed);
    std::uint64_t next_checkpoint = config.checkpoint_every;

    // Occupied keys in insertion order for O(1) uniform parent picks.
    std::vector<CellIndex> occupied;
    std::vector<Vec> batch;
    std::vector<std::pair<double, Vec>> results;

    while (archive.eval_count < budget) {
        const std::uint64_t remaining = budget - archive.eval_count;
        std::uint64_t batch_size = std::min<std::uint64_t>(remaining,
                                                           static_cast<std::uint64_t>(std::max(1, config.batch_size)));
        // The init phase is uniform random; afterwards mutate uniform picks
        // from the occupied cells. Generation is sequential so the stream of
        // random draws is independent of the thread count.
        batch.clear();
        for (std::uint64_t i = 0; i < batch_size; ++i) {
            const bool init_phase = archive.eval_count + i < static_cast<std::uint64_t>(config.init_random);
            if (init_phase || occupied.empty()) {
                Vec p(param_dim);
                for (int j = 0; j < param_dim; ++j)
                    p[j] = rng.uniform01();
                batch.push_back(std::move(p));
            } else {
                const CellIndex cell = occupied[rng.uniform_index(occupied.size())];
                batch.push_back(variation(archive.cells.find(cell)->second.params, config.sigma,
                                          rng));
            }
        }

        results.assign(batch.size(), {});
        indexed_parallel_for(batch.size(), config.threads,
                             [&](std::size_t i) { results[i] = task(batch[i]); });

        // Fixed-order merge.
        for (std::size_t i = 0; i < batch.size(); ++i) {
            archive.eval_count += 1;
            auto& [fitness, descriptor] = results[i];
            if (std::isnan(fitness))
                continue; // consumes budget, never enters the archive
            Elite candidate{std::move(batch[i]), fitness, std::move(descriptor)};
            const CellIndex cell = descriptor_to_cell(candidate.descriptor, archive.grid);
            if (archive_insert(archive, std::move(candidate)) == InsertOutcome::Inserted)
                occupied.push_back(cell);
        }

        if (checkpoints && config.checkpoint_every > 0) {
            while (next_checkpoint <= archive.eval_count) {
                checkpoints->push_back(archive_stats(archive));
                next_checkpoint += config.checkpoint_every;
            }
        }
    }

    if (checkpoints)
        checkpoints->push_back(archive_stats(archive));
    return archive;
}

std::string archive_to_csv(const EliteArchive& archive)
{
    const int k = archive.grid.descriptor_dim;
    const int d = archive.param_dim;
    std::ostringstream out;
    for (int i = 0; i < k; ++i)
        out << "cell_" << i << ',';
    for (int i = 0; i < k; ++i)
        out << "desc_" << i << ',';
    out << "fitness";
    for (int i = 0; i < d; ++i)
        out << ",p_" << i;
    out << '\n';

    for (const auto& [cell, elite] : archive.cells) {
        const std::vector<int> coords = cell_coords(cell, archive.grid);
        for (int i = 0; i < k; ++i)
            out << coords[i] << ',';
        for (int i = 0; i < k; ++i)
            out << format_double(elite.descriptor[i]) << ',';
        out << format_double(elite.fitness);
        for (int i = 0; i < d; ++i)
            out << ',' << format_double(elite.params[i]);
        out << '\n';
    }
    return out.str();
}

void save_archive_csv(const EliteArchive& archive, const std::string& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("cannot open for writing: " + path);
    file << archive_to_csv(archive);
    if (!file)
        throw std::runtime_error("write failed: " + path);
}

EliteArchive archive_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("archive CSV: missing header");

    const auto header = split_line(line);
    int k = 0;
    while (k < static_cast<int>(header.size())
           && header[k] == "cell_" + std::to_string(k))
        ++k;
    if (k == 0)
        throw std::invalid_argument("archive CSV: bad header");
    for (int i = 0; i < k; ++i)
        if (header[k + i] != "desc_" + std::to_string(i))
            throw std::invalid_argument("archive CSV: bad header");
    if (header[2 * k] != "fitness")
        throw std::invalid_argument("archive CSV: bad header");
    const int d = static_cast<int>(header.size()) - 2 * k - 1;
    for (int i = 0; i < d; ++i)
        if (header[2 * k + 1 + i] != "p_" + std::to_string(i))
            throw std::invalid_argument("archive CSV: bad header");

    EliteArchive archive;
    archive.grid.descriptor_dim = k;
    archive.param_dim = d;

    int max_bin = 0;
    std::vector<std::pair<std::vector<int>, Elite>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("archive CSV: wrong field count");
        std::vector<int> coords(k);
        for (int i = 0; i < k; ++i) {
            coords[i] = static_cast<int>(parse_int(fields[i]));
            max_bin = std::max(max_bin, coords[i]);
        }
        Elite elite;
        elite.descriptor = Vec(k);
        for (int i = 0; i < k; ++i)
            elite.descriptor[i] = parse_double(fields[k + i]);
        elite.fitness = parse_double(fields[2 * k]);
        elite.params = Vec(d);
        for (int i = 0; i < d; ++i)
            elite.params[i] = parse_double(fields[2 * k + 1 + i]);
        rows.emplace_back(std::move(coords), std::move(elite));
    }

    // The bin count is not stored in the file; recover the smallest grid,
    // starting at max_bin + 1, under which every descriptor maps back to its
    // recorded cell coordinates.
    bool grid_found = false;
    for (int bins = max_bin + 1; bins <= max_bin + 65 && !grid_found; ++bins) {
        archive.grid.bins_per_dim = bins;
        grid_found = true;
        for (const auto& [coords, elite] : rows) {
            if (descriptor_to_cell(elite.descriptor, archive.grid)
                != coords_to_cell(coords, archive.grid)) {
                grid_found = false;
                break;
            }
        }
    }
    if (!grid_found)
        throw std::invalid_argument("archive CSV: no grid is consistent with the rows");

    for (auto& [coords, elite] : rows) {
        archive.cells.emplace(coords_to_cell(coords, archive.grid), std::move(elite));
    }
    archive.eval_count = archive.cells.size();
    return archive;
}

EliteArchive load_archive_csv(const std::string& path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("cannot open archive: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    return archive_from_csv(buf.str());
}

} // namespace microdata::elites
