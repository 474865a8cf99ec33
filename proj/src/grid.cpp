#include "sparse_lidar/grid.hpp"

#include <algorithm>
#include <cmath>

#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

void GridConfig::validate() const
{
    if (!(cell_size > 0.0) || !(x_min < x_max) || !(y_min < y_max) || occupancy_threshold < 1)
    {
        throw ConfigError("grid: cell_size > 0, x_min < x_max, y_min < y_max, occupancy_threshold >= 1 required");
    }
}

OccupancyGrid::OccupancyGrid(const GridConfig& config) : config_(config)
{
    config_.validate();
    // Small epsilon keeps exact multiples (60 / 0.05) from rounding up to an extra cell.
    cols_ = static_cast<int>(std::ceil((config_.x_max - config_.x_min) / config_.cell_size - 1e-9));
    rows_ = static_cast<int>(std::ceil((config_.y_max - config_.y_min) / config_.cell_size - 1e-9));
    cells_.assign(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0);
}

std::optional<CellIndex> OccupancyGrid::cell_of(double u, double v) const
{
    if (!(u >= config_.x_min) || !(v >= config_.y_min))
    {
        return std::nullopt;
    }
    const double fc = std::floor((u - config_.x_min) / config_.cell_size);
    const double fr = std::floor((v - config_.y_min) / config_.cell_size);
    if (fc >= cols_ || fr >= rows_)
    {
        return std::nullopt;
    }
    return CellIndex{static_cast<int>(fr), static_cast<int>(fc)};
}

Eigen::Vector2d OccupancyGrid::cell_center(int row, int col) const
{
    return {config_.x_min + (col + 0.5) * config_.cell_size, config_.y_min + (row + 0.5) * config_.cell_size};
}

std::size_t OccupancyGrid::occupied_count() const
{
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

OccupancyGrid project_to_grid(const PointCloud& cloud, const Plane3& ground, const GridConfig& config)
{
    OccupancyGrid grid(config);
    const GroundFrame frame(ground);
    std::vector<int> counts(grid.data().size(), 0);
    for (const auto& p : cloud.points)
    {
        const Eigen::Vector2d uv = frame.project(p.position());
        if (const auto cell = grid.cell_of(uv.x(), uv.y()))
        {
            ++counts[static_cast<std::size_t>(cell->row) * grid.cols() + cell->col];
        }
    }
    auto& cells = grid.data();
    for (std::size_t i = 0; i < counts.size(); ++i)
    {
        cells[i] = counts[i] >= config.occupancy_threshold ? 1 : 0;
    }
    return grid;
}

namespace
{

// One separable pass of a square structuring element along rows (stride 1) or columns.
void morph_pass(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out, int rows, int cols, int radius,
                bool dilate, bool along_rows)
{
    const int lines = along_rows ? rows : cols;
    const int length = along_rows ? cols : rows;
    const std::size_t step = along_rows ? 1 : static_cast<std::size_t>(cols);
    const int full = 2 * radius + 1;
    std::vector<int> prefix(static_cast<std::size_t>(length) + 1);
    for (int line = 0; line < lines; ++line)
    {
        const std::size_t base = along_rows ? static_cast<std::size_t>(line) * cols : static_cast<std::size_t>(line);
        prefix[0] = 0;
        for (int i = 0; i < length; ++i)
        {
            prefix[i + 1] = prefix[i] + in[base + i * step];
        }
        for (int i = 0; i < length; ++i)
        {
            const int lo = i - radius;
            const int hi = i + radius;
            std::uint8_t value;
            if (dilate)
            {
                value = prefix[std::min(hi, length - 1) + 1] - prefix[std::max(lo, 0)] > 0 ? 1 : 0;
            }
            else
            {
                value = (lo >= 0 && hi < length && prefix[hi + 1] - prefix[lo] == full) ? 1 : 0;
            }
            out[base + i * step] = value;
        }
    }
}

OccupancyGrid apply_square(const OccupancyGrid& grid, int radius, bool dilate)
{
    OccupancyGrid out = grid;
    std::vector<std::uint8_t> tmp(grid.data().size());
    morph_pass(grid.data(), tmp, grid.rows(), grid.cols(), radius, dilate, true);
    morph_pass(tmp, out.data(), grid.rows(), grid.cols(), radius, dilate, false);
    return out;
}

} // namespace

OccupancyGrid morphology(const OccupancyGrid& grid, MorphOp op, int kernel_radius)
{
    if (kernel_radius < 1)
    {
        throw PreconditionError("morphology: kernel_radius must be >= 1");
    }
    switch (op)
    {
    case MorphOp::erode:
        return apply_square(grid, kernel_radius, false);
    case MorphOp::dilate:
        return apply_square(grid, kernel_radius, true);
    case MorphOp::open:
        return apply_square(apply_square(grid, kernel_radius, false), kernel_radius, true);
    case MorphOp::close:
        return apply_square(apply_square(grid, kernel_radius, true), kernel_radius, false);
    }
    return grid;
}

Eigen::Vector2d Cluster::bbox_sides(double cell_size) const
{
    return {bbox.col_span() * cell_size, bbox.row_span() * cell_size};
}

namespace
{

Cluster make_cluster(const OccupancyGrid& grid, std::vector<CellIndex> cells)
{
    Cluster cluster;
    cluster.cells = std::move(cells);
    std::sort(cluster.cells.begin(), cluster.cells.end());
    cluster.bbox = {cluster.cells.front().row, cluster.cells.front().row, cluster.cells.front().col,
                    cluster.cells.front().col};
    cluster.metric_points.reserve(cluster.cells.size());
    for (const auto& cell : cluster.cells)
    {
        cluster.bbox.min_row = std::min(cluster.bbox.min_row, cell.row);
        cluster.bbox.max_row = std::max(cluster.bbox.max_row, cell.row);
        cluster.bbox.min_col = std::min(cluster.bbox.min_col, cell.col);
        cluster.bbox.max_col = std::max(cluster.bbox.max_col, cell.col);
        cluster.metric_points.push_back(grid.cell_center(cell.row, cell.col));
    }
    return cluster;
}

void sort_by_size(std::vector<Cluster>& clusters)
{
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const Cluster& a, const Cluster& b) { return a.size() > b.size(); });
}

} // namespace

std::vector<Cluster> connected_components(const OccupancyGrid& grid, int connectivity)
{
    if (connectivity != 4 && connectivity != 8)
    {
        throw PreconditionError("connected_components: connectivity must be 4 or 8");
    }
    static constexpr int kOffsets[8][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    const int neighbours = connectivity;
    const int rows = grid.rows();
    const int cols = grid.cols();

    std::vector<int> label(grid.data().size(), -1);
    std::vector<Cluster> clusters;
    std::vector<CellIndex> stack;
    for (int r = 0; r < rows; ++r)
    {
        for (int c = 0; c < cols; ++c)
        {
            const auto idx = static_cast<std::size_t>(r) * cols + c;
            if (!grid.data()[idx] || label[idx] >= 0)
            {
                continue;
            }
            const int id = static_cast<int>(clusters.size());
            Cluster cluster;
            label[idx] = id;
            stack.assign(1, CellIndex{r, c});
            while (!stack.empty())
            {
                const CellIndex cell = stack.back();
                stack.pop_back();
                cluster.cells.push_back(cell);
                for (int k = 0; k < neighbours; ++k)
                {
                    const int nr = cell.row + kOffsets[k][0];
                    const int nc = cell.col + kOffsets[k][1];
                    if (!grid.in_bounds(nr, nc))
                    {
                        continue;
                    }
                    const auto nidx = static_cast<std::size_t>(nr) * cols + nc;
                    if (grid.data()[nidx] && label[nidx] < 0)
                    {
                        label[nidx] = id;
                        stack.push_back({nr, nc});
                    }
                }
            }
            clusters.push_back(make_cluster(grid, std::move(cluster.cells)));
        }
    }
    // Discovery order is row-major, so the first member of each cluster is its smallest cell;
    // a stable sort by size keeps that tie-break.
    sort_by_size(clusters);
    return clusters;
}

std::vector<Cluster> linked_components(const OccupancyGrid& grid, int link_radius, int connectivity)
{
    if (link_radius < 0)
    {
        throw PreconditionError("linked_components: negative link radius");
    }
    if (link_radius == 0)
    {
        return connected_components(grid, connectivity);
    }
    auto groups = connected_components(morphology(grid, MorphOp::dilate, link_radius), connectivity);
    std::vector<Cluster> clusters;
    for (auto& group : groups)
    {
        std::vector<CellIndex> cells;
        for (const auto& cell : group.cells)
        {
            if (grid.occupied(cell.row, cell.col))
            {
                cells.push_back(cell);
            }
        }
        if (!cells.empty())
        {
            clusters.push_back(make_cluster(grid, std::move(cells)));
        }
    }
    // Re-establish the (size, smallest cell) order on the surviving cells.
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.cells.front() < b.cells.front(); });
    sort_by_size(clusters);
    return clusters;
}

void ClusterFilterParams::validate() const
{
    if (!(min_area > 0.0) || !(min_area < max_area) || !(min_side > 0.0) || !(min_side < max_side) ||
        !(pedestrian_max_side > 0.0))
    {
        throw ConfigError("cluster filter: positive bounds with min < max required");
    }
}

std::vector<Cluster> filter_clusters(const std::vector<Cluster>& clusters, const ClusterFilterParams& params,
                                     double cell_size)
{
    std::vector<Cluster> kept;
    for (const auto& cluster : clusters)
    {
        const double area = static_cast<double>(cluster.size()) * cell_size * cell_size;
        const Eigen::Vector2d sides = cluster.bbox_sides(cell_size);
        const double longer = sides.maxCoeff();
        if (area >= params.min_area && area <= params.max_area && longer >= params.min_side &&
            longer <= params.max_side)
        {
            kept.push_back(cluster);
        }
    }
    return kept;
}

SizeClass classify_cluster_size(const Cluster& cluster, const ClusterFilterParams& params, double cell_size)
{
    const Eigen::Vector2d sides = cluster.bbox_sides(cell_size);
    return sides.maxCoeff() <= params.pedestrian_max_side ? SizeClass::pedestrian_like : SizeClass::vehicle_like;
}

std::string format_grid(const OccupancyGrid& grid)
{
    std::string out = std::to_string(grid.rows()) + " " + std::to_string(grid.cols()) + "\n";
    out.reserve(out.size() + static_cast<std::size_t>(grid.rows()) * (2 * grid.cols() + 1));
    for (int r = 0; r < grid.rows(); ++r)
    {
        for (int c = 0; c < grid.cols(); ++c)
        {
            if (c > 0)
            {
                out += ' ';
            }
            out += grid.occupied(r, c) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

} // namespace sparse_lidar
