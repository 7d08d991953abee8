// Occupancy grid over the arena for avatar-centre positions.
#pragma once

#include "goalcycle/world.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace goalcycle::env {

/// Disc that a path must stay out of (used to route around goals that must not be entered).
struct Keepout {
    Vec2 centre;
    double radius;
};

/// A cell is free when its centre keeps `margin` beyond the avatar clearance from every
/// pillar, keepout disc and the arena wall.
class OccupancyGrid {
public:
    OccupancyGrid(const World& world, double cell, double margin, std::span<const Keepout> keepouts = {});

    int width() const { return width_; }
    int height() const { return height_; }
    double cell() const { return cell_; }
    int index(int ix, int iy) const { return iy * width_ + ix; }
    bool in_range(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width_ && iy < height_; }
    bool free(int ix, int iy) const { return in_range(ix, iy) && free_[static_cast<std::size_t>(index(ix, iy))] != 0; }
    Vec2 centre(int ix, int iy) const { return Vec2((ix + 0.5) * cell_, (iy + 0.5) * cell_); }
    std::pair<int, int> cell_of(const Vec2& p) const;

    /// Connected-component label per cell (-1 for blocked), 8-connectivity without corner cutting.
    std::vector<int> components() const;

private:
    int width_ = 0;
    int height_ = 0;
    double cell_ = 1.0;
    std::vector<std::uint8_t> free_;
};

/// True when the whole segment keeps an avatar clear of pillars and keepouts
/// and inside the arena.
bool segment_clear(const World& world, const Vec2& a, const Vec2& b, double margin,
                   std::span<const Keepout> keepouts = {});

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace goalcycle::env
