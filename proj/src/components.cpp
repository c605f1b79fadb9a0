#include "petseg/components.hpp"

#include <numeric>
#include <string>

namespace petseg {
namespace {

// Disjoint sets over provisional labels with path halving.
class UnionFind {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller root wins so roots stay in creation order.
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

Connectivity connectivity_from_int(int n) {
  switch (n) {
    case 6: return Connectivity::kFace6;
    case 18: return Connectivity::kEdge18;
    case 26: return Connectivity::kVertex26;
    default: throw DomainError("connectivity must be 6, 18 or 26, got " + std::to_string(n));
  }
}

int to_int(Connectivity c) { return static_cast<int>(c); }

std::vector<Index3> neighbor_offsets(Connectivity c) {
  // Manhattan length 1 = face, 2 = edge, 3 = vertex neighbours.
  const int max_norm = c == Connectivity::kFace6 ? 1 : c == Connectivity::kEdge18 ? 2 : 3;
  std::vector<Index3> out;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto norm = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (norm == 0 || norm > max_norm) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

LabelMap label_components(const BinaryMask& mask, Connectivity conn) {
  const Grid& g = mask.grid();
  // Only neighbours already visited in scan order are consulted in pass one.
  std::vector<Index3> back;
  for (const Index3& d : neighbor_offsets(conn)) {
    if (d[2] < 0 || (d[2] == 0 && (d[1] < 0 || (d[1] == 0 && d[0] < 0)))) back.push_back(d);
  }

  constexpr std::uint32_t kNone = 0xffffffffu;
  std::vector<std::uint32_t> prov(g.voxel_count(), kNone);
  UnionFind sets;
  for (std::int64_t z = 0; z < g.dims[2]; ++z) {
    for (std::int64_t y = 0; y < g.dims[1]; ++y) {
      for (std::int64_t x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = g.index(x, y, z);
        if (mask[i] == 0) continue;
        std::uint32_t label = kNone;
        for (const Index3& d : back) {
          const std::int64_t nx = x + d[0], ny = y + d[1], nz = z + d[2];
          if (!g.contains(nx, ny, nz)) continue;
          const std::uint32_t other = prov[g.index(nx, ny, nz)];
          if (other == kNone) continue;
          if (label == kNone) {
            label = other;
          } else if (other != label) {
            sets.unite(label, other);
          }
        }
        prov[i] = label == kNone ? sets.make() : label;
      }
    }
  }

  std::vector<std::int32_t> final_label(sets.size(), 0);
  std::vector<std::int32_t> out(g.voxel_count(), 0);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (prov[i] == kNone) continue;
    const std::uint32_t root = sets.find(prov[i]);
    if (final_label[root] == 0) final_label[root] = ++next;
    out[i] = final_label[root];
  }
  return LabelMap(g, std::move(out), next);
}

std::vector<std::uint64_t> component_sizes(const LabelMap& labels) {
  std::vector<std::uint64_t> sizes(static_cast<std::size_t>(labels.n_components()), 0);
  for (std::int32_t l : labels.data()) {
    if (l > 0) ++sizes[static_cast<std::size_t>(l - 1)];
  }
  return sizes;
}

}  // namespace petseg
