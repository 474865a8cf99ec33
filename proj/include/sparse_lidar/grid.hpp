#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparse_lidar/geometry.hpp"

namespace sparse_lidar
{

struct GridConfig
{
    double cell_size = 0.20;
    double x_min = -30.0;
    double x_max = 30.0;
    double y_min = -20.0;
    double y_max = 20.0;
    int occupancy_threshold = 2; ///< a cell is occupied when it receives at least this many points

    void validate() const;
};

struct CellIndex
{
    int row = 0;
    int col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Binary lattice over the ground frame. Row index follows v (ground-frame y), column follows u.
/// Cell (r, c) covers [x_min + c*cell, x_min + (c+1)*cell) x [y_min + r*cell, y_min + (r+1)*cell).
class OccupancyGrid
{
  public:
    OccupancyGrid() = default;
    explicit OccupancyGrid(const GridConfig& config);

    const GridConfig& config() const { return config_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    bool occupied(int row, int col) const { return cells_[index(row, col)] != 0; }
    void set(int row, int col, bool value) { cells_[index(row, col)] = value ? 1 : 0; }
    bool in_bounds(int row, int col) const { return row >= 0 && col >= 0 && row < rows_ && col < cols_; }

    /// Cell containing ground-frame point (u, v), if inside the extent.
    std::optional<CellIndex> cell_of(double u, double v) const;
    Eigen::Vector2d cell_center(int row, int col) const;

    std::size_t occupied_count() const;
    bool empty() const { return occupied_count() == 0; }

    const std::vector<std::uint8_t>& data() const { return cells_; }
    std::vector<std::uint8_t>& data() { return cells_; }

    friend bool operator==(const OccupancyGrid& a, const OccupancyGrid& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
    }

  private:
    std::size_t index(int row, int col) const
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col);
    }

    GridConfig config_;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> cells_;
};

/// Projects every point orthogonally onto the ground plane and bins it.
OccupancyGrid project_to_grid(const PointCloud& cloud, const Plane3& ground, const GridConfig& config);

enum class MorphOp
{
    erode,
    dilate,
    open,
    close
};

/// Binary morphology with a (2r+1)x(2r+1) square; cells outside the grid count as free.
OccupancyGrid morphology(const OccupancyGrid& grid, MorphOp op, int kernel_radius);

struct CellBox
{
    int min_row = 0;
    int max_row = 0;
    int min_col = 0;
    int max_col = 0;

    int row_span() const { return max_row - min_row + 1; }
    int col_span() const { return max_col - min_col + 1; }
};

struct Cluster
{
    std::vector<CellIndex> cells;               ///< row-major sorted
    std::vector<Eigen::Vector2d> metric_points; ///< ground-frame centers of `cells`, same order
    CellBox bbox;

    std::size_t size() const { return cells.size(); }
    /// Metric side lengths of the cell bounding box: (along u, along v).
    Eigen::Vector2d bbox_sides(double cell_size) const;
};

/// Labels occupied cells into clusters under 4- or 8-connectivity. Output is ordered by
/// descending size, ties broken by the smallest (row, col) member.
std::vector<Cluster> connected_components(const OccupancyGrid& grid, int connectivity = 8);

/// Like connected_components, but occupied cells also join when their dilations by `link_radius`
/// touch (Chebyshev gap up to 2 * link_radius cells). Clusters hold only the cells of `grid`.
std::vector<Cluster> linked_components(const OccupancyGrid& grid, int link_radius, int connectivity = 8);

struct ClusterFilterParams
{
    double min_area = 0.3;
    double max_area = 40.0;
    double min_side = 0.3;
    double max_side = 15.0;
    double pedestrian_max_side = 1.0;

    void validate() const;
};

/// Keeps clusters with area in [min_area, max_area], longer bbox side >= min_side and
/// both bbox sides <= max_side. Order is preserved.
std::vector<Cluster> filter_clusters(const std::vector<Cluster>& clusters, const ClusterFilterParams& params,
                                     double cell_size);

enum class SizeClass
{
    vehicle_like,
    pedestrian_like
};

SizeClass classify_cluster_size(const Cluster& cluster, const ClusterFilterParams& params, double cell_size);

/// Text dump: `rows cols` on the first line, then one line per row (row 0 = minimum y) of 0/1.
std::string format_grid(const OccupancyGrid& grid);

} // namespace sparse_lidar
