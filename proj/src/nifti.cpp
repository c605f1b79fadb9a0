#include "petseg/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace petseg {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;  // header + 4-byte empty extension block

// Header field offsets (NIfTI-1).
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffSrowY = 296;
constexpr std::size_t kOffSrowZ = 312;
constexpr std::size_t kOffMagic = 344;

template <typename T>
T byteswap_value(T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

// Little-endian on disk unless the header says otherwise.
class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& buf, bool swap) : buf_(buf), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, buf_.data() + offset, sizeof(T));
    return needs_swap() ? byteswap_value(v) : v;
  }

 private:
  bool needs_swap() const { return swap_ != (std::endian::native == std::endian::big); }
  const std::vector<unsigned char>& buf_;
  bool swap_;
};

template <typename T>
void put(std::vector<unsigned char>& buf, std::size_t offset, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::string at_offset(const std::filesystem::path& path, std::size_t off) {
  return path.string() + ": byte offset " + std::to_string(off) + ": ";
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> chunk{};
  for (;;) {
    const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int code = 0;
      std::string msg = gzerror(f, &code);
      gzclose(f);
      throw IoError("read error in " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return out;
}

std::size_t bytes_per_voxel(std::int16_t code) {
  switch (static_cast<NiftiType>(code)) {
    case NiftiType::kUint8: return 1;
    case NiftiType::kInt16: return 2;
    case NiftiType::kInt32: return 4;
    case NiftiType::kFloat32: return 4;
    case NiftiType::kFloat64: return 8;
  }
  return 0;
}

struct Decoded {
  Grid grid;
  std::vector<double> values;
};

Decoded decode(const std::filesystem::path& path) {
  const std::vector<unsigned char> buf = slurp(path);
  if (buf.size() < kHeaderSize) {
    throw FormatError(at_offset(path, buf.size()) + "file ends inside the 348-byte header");
  }

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, buf.data() + kOffSizeofHdr, 4);
  if constexpr (std::endian::native == std::endian::big) sizeof_hdr = byteswap_value(sizeof_hdr);
  bool swap = false;
  if (sizeof_hdr == 348) {
    swap = false;
  } else if (byteswap_value(sizeof_hdr) == 348) {
    swap = true;
  } else if (sizeof_hdr == 540 || byteswap_value(sizeof_hdr) == 540) {
    throw UnsupportedError(path.string() + ": NIfTI-2 headers are not supported");
  } else {
    throw FormatError(at_offset(path, kOffSizeofHdr) + "sizeof_hdr is " +
                      std::to_string(sizeof_hdr) + ", expected 348");
  }
  const ByteReader rd(buf, swap);

  const char* magic = reinterpret_cast<const char*>(buf.data() + kOffMagic);
  if (std::memcmp(magic, "ni1\0", 4) == 0) {
    throw UnsupportedError(path.string() + ": two-file (.hdr/.img) NIfTI is not supported");
  }
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    throw FormatError(at_offset(path, kOffMagic) + "missing NIfTI-1 magic \"n+1\"");
  }

  const auto ndim = rd.get<std::int16_t>(kOffDim);
  if (ndim < 1 || ndim > 7) {
    throw FormatError(at_offset(path, kOffDim) + "dim[0] is " + std::to_string(ndim));
  }
  Grid grid;
  for (int a = 0; a < 3; ++a) {
    const std::size_t off = kOffDim + 2 * static_cast<std::size_t>(a + 1);
    std::int16_t d = a < ndim ? rd.get<std::int16_t>(off) : std::int16_t{1};
    if (d < 1) throw FormatError(at_offset(path, off) + "dim is " + std::to_string(d));
    grid.dims[a] = d;
  }
  for (int a = 3; a < ndim; ++a) {
    const std::size_t off = kOffDim + 2 * static_cast<std::size_t>(a + 1);
    if (rd.get<std::int16_t>(off) > 1) {
      throw UnsupportedError(path.string() + ": volumes with more than 3 dimensions are not supported");
    }
  }

  const auto datatype = rd.get<std::int16_t>(kOffDatatype);
  const std::size_t bpv = bytes_per_voxel(datatype);
  if (bpv == 0) {
    throw UnsupportedError(path.string() + ": unsupported NIfTI datatype code " +
                           std::to_string(datatype));
  }

  for (int a = 0; a < 3; ++a) {
    const std::size_t off = kOffPixdim + 4 * static_cast<std::size_t>(a + 1);
    const double p = std::fabs(static_cast<double>(rd.get<float>(off)));
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw FormatError(at_offset(path, off) + "pixdim is not a positive finite spacing");
    }
    grid.spacing[a] = p;
  }

  const auto sform = rd.get<std::int16_t>(kOffSformCode);
  const auto qform = rd.get<std::int16_t>(kOffQformCode);
  if (sform > 0) {
    grid.origin = {rd.get<float>(kOffSrowX + 12), rd.get<float>(kOffSrowY + 12),
                   rd.get<float>(kOffSrowZ + 12)};
  } else if (qform > 0) {
    grid.origin = {rd.get<float>(kOffQoffset), rd.get<float>(kOffQoffset + 4),
                   rd.get<float>(kOffQoffset + 8)};
  }

  const double vox_offset_f = rd.get<float>(kOffVoxOffset);
  if (!(vox_offset_f >= static_cast<double>(kHeaderSize)) || vox_offset_f != std::floor(vox_offset_f)) {
    throw FormatError(at_offset(path, kOffVoxOffset) + "vox_offset " +
                      std::to_string(vox_offset_f) + " is invalid");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t n = grid.voxel_count();
  if (vox_offset + n * bpv > buf.size()) {
    throw FormatError(at_offset(path, buf.size()) + "voxel data truncated: need " +
                      std::to_string(vox_offset + n * bpv) + " bytes");
  }

  std::vector<double> values(n);
  const std::size_t base = vox_offset;
  switch (static_cast<NiftiType>(datatype)) {
    case NiftiType::kUint8:
      for (std::size_t i = 0; i < n; ++i) values[i] = buf[base + i];
      break;
    case NiftiType::kInt16:
      for (std::size_t i = 0; i < n; ++i) values[i] = rd.get<std::int16_t>(base + 2 * i);
      break;
    case NiftiType::kInt32:
      for (std::size_t i = 0; i < n; ++i) values[i] = rd.get<std::int32_t>(base + 4 * i);
      break;
    case NiftiType::kFloat32:
      for (std::size_t i = 0; i < n; ++i) values[i] = rd.get<float>(base + 4 * i);
      break;
    case NiftiType::kFloat64:
      for (std::size_t i = 0; i < n; ++i) values[i] = rd.get<double>(base + 8 * i);
      break;
  }

  const double slope = rd.get<float>(kOffSclSlope);
  const double inter = rd.get<float>(kOffSclInter);
  if (slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0)) {
    for (double& v : values) v = v * slope + inter;
  }
  return {grid, std::move(values)};
}

std::vector<unsigned char> encode_header(const Grid& grid, NiftiType type) {
  std::vector<unsigned char> h(kDataOffset, 0);
  put<std::int32_t>(h, kOffSizeofHdr, 348);
  put<std::int16_t>(h, kOffDim, 3);
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] > 32767) {
      throw UnsupportedError("dimension " + std::to_string(grid.dims[a]) +
                             " exceeds the NIfTI-1 limit of 32767");
    }
    put<std::int16_t>(h, kOffDim + 2 * static_cast<std::size_t>(a + 1),
                      static_cast<std::int16_t>(grid.dims[a]));
  }
  for (int a = 4; a <= 7; ++a) put<std::int16_t>(h, kOffDim + 2 * static_cast<std::size_t>(a), 1);
  put<std::int16_t>(h, kOffDatatype, static_cast<std::int16_t>(type));
  put<std::int16_t>(h, kOffBitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(static_cast<std::int16_t>(type))));
  put<float>(h, kOffPixdim, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) {
    put<float>(h, kOffPixdim + 4 * static_cast<std::size_t>(a + 1), static_cast<float>(grid.spacing[a]));
  }
  put<float>(h, kOffVoxOffset, static_cast<float>(kDataOffset));
  put<float>(h, kOffSclSlope, 1.0f);
  put<float>(h, kOffSclInter, 0.0f);
  h[kOffXyztUnits] = 2;  // millimeters
  put<std::int16_t>(h, kOffQformCode, 1);
  put<std::int16_t>(h, kOffSformCode, 1);
  for (int a = 0; a < 3; ++a) {
    put<float>(h, kOffQoffset + 4 * static_cast<std::size_t>(a), static_cast<float>(grid.origin[a]));
  }
  const std::array<std::size_t, 3> rows{kOffSrowX, kOffSrowY, kOffSrowZ};
  for (int r = 0; r < 3; ++r) {
    put<float>(h, rows[r] + 4 * static_cast<std::size_t>(r), static_cast<float>(grid.spacing[r]));
    put<float>(h, rows[r] + 12, static_cast<float>(grid.origin[r]));
  }
  std::memcpy(h.data() + kOffMagic, "n+1\0", 4);
  return h;
}

bool has_gz_suffix(const std::filesystem::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

void emit(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  if (has_gz_suffix(path)) {
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (f == nullptr) throw IoError("cannot open " + path.string() + " for writing");
    std::size_t written = 0;
    while (written < bytes.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - written, 1u << 30));
      if (gzwrite(f, bytes.data() + written, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw IoError("write error on " + path.string());
      }
      written += chunk;
    }
    if (gzclose(f) != Z_OK) throw IoError("close error on " + path.string());
    return;
  }
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  const bool closed = std::fclose(f) == 0;
  if (n != bytes.size() || !closed) throw IoError("write error on " + path.string());
}

template <typename Stored, typename Src>
void write_payload(const Grid& grid, std::span<const Src> data, NiftiType type,
                   const std::filesystem::path& path) {
  std::vector<unsigned char> bytes = encode_header(grid, type);
  const std::size_t base = bytes.size();
  bytes.resize(base + data.size() * sizeof(Stored));
  for (std::size_t i = 0; i < data.size(); ++i) {
    put<Stored>(bytes, base + i * sizeof(Stored), static_cast<Stored>(data[i]));
  }
  emit(path, bytes);
}

}  // namespace

ScalarVolume read_nifti(const std::filesystem::path& path, VolumeKind kind) {
  Decoded d = decode(path);
  return ScalarVolume(d.grid, std::move(d.values), kind);
}

BinaryMask read_nifti_mask(const std::filesystem::path& path) {
  Decoded d = decode(path);
  std::set<double> offending;
  std::vector<std::uint8_t> bits(d.values.size());
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    const double v = d.values[i];
    if (v == 0.0) {
      bits[i] = 0;
    } else if (v == 1.0) {
      bits[i] = 1;
    } else if (offending.size() < 8) {
      offending.insert(v);
    }
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": mask is not binary; offending values:";
    for (double v : offending) msg << ' ' << v;
    throw DataError(msg.str());
  }
  return BinaryMask(d.grid, std::move(bits));
}

void write_nifti(const ScalarVolume& vol, const std::filesystem::path& path) {
  const auto data = vol.data();
  const bool fits_float = std::all_of(data.begin(), data.end(), [](double v) {
    return std::isnan(v) || static_cast<double>(static_cast<float>(v)) == v;
  });
  if (fits_float) {
    write_payload<float>(vol.grid(), data, NiftiType::kFloat32, path);
  } else {
    write_payload<double>(vol.grid(), data, NiftiType::kFloat64, path);
  }
}

void write_nifti(const BinaryMask& mask, const std::filesystem::path& path) {
  write_payload<std::uint8_t>(mask.grid(), mask.data(), NiftiType::kUint8, path);
}

void write_nifti(const LabelMap& labels, const std::filesystem::path& path) {
  write_payload<std::int32_t>(labels.grid(), labels.data(), NiftiType::kInt32, path);
}

}  // namespace petseg
