#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "petseg/volume.hpp"

namespace petseg {

enum class Connectivity { kFace6 = 6, kEdge18 = 18, kVertex26 = 26 };

// Accepts 6, 18 or 26.
Connectivity connectivity_from_int(int n);
int to_int(Connectivity c);

// Neighbour displacements (dx, dy, dz) of the adjacency rule, excluding (0,0,0).
std::vector<Index3> neighbor_offsets(Connectivity c);

// Partitions the foreground into maximal connected sets. Labels are numbered
// 1..L in the order their first voxel appears in linear (x-fastest) scan order.
LabelMap label_components(const BinaryMask& mask, Connectivity conn = Connectivity::kFace6);

// Voxel count per label, in label order (element 0 belongs to label 1).
std::vector<std::uint64_t> component_sizes(const LabelMap& labels);

}  // namespace petseg
