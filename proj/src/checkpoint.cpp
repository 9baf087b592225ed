#include "pcl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pcl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive format assumes a little-endian host");
static_assert(sizeof(double) == 8);

namespace pcl {

namespace {
constexpr char kMagic[8] = {'P', 'C', 'L', 'T', 'N', 'S', 'R', '1'};
}

struct Archive::Impl {
  nlohmann::json meta = nlohmann::json::object();
};

Archive::Archive() : impl_(std::make_unique<Impl>()) {}
Archive::~Archive() = default;
Archive::Archive(Archive&&) noexcept = default;
Archive& Archive::operator=(Archive&&) noexcept = default;

nlohmann::json& Archive::meta() { return impl_->meta; }
const nlohmann::json& Archive::meta() const { return impl_->meta; }

void Archive::save(const std::filesystem::path& path, const ParameterStore& params) const {
  nlohmann::json header;
  header["meta"] = impl_->meta;
  auto manifest = nlohmann::json::array();
  for (const auto& t : params.tensors())
    manifest.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  header["tensors"] = manifest;
  const std::string header_bytes = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write archive: " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = header_bytes.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (const auto& t : params.tensors()) {
      // Eigen default storage is column-major; serialize row-major for a
      // layout-independent file.
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = t.value;
      out.write(reinterpret_cast<const char*>(rm.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
    }
    if (!out) throw InputError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path, ParameterStore& params_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open archive: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a tensor archive: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ull << 30))
    throw FormatError("corrupt archive header length: " + path.string());
  std::string header_bytes(len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("truncated archive header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt archive header JSON: " + path.string() + ": " + e.what());
  }

  Archive archive;
  archive.impl_->meta = header.value("meta", nlohmann::json::object());
  if (!header.contains("tensors") || !header["tensors"].is_array())
    throw FormatError("archive missing tensor manifest: " + path.string());

  params_out = ParameterStore();
  for (const auto& entry : header["tensors"]) {
    const std::string name = entry.at("name").get<std::string>();
    const long rows = entry.at("rows").get<long>();
    const long cols = entry.at("cols").get<long>();
    if (rows < 0 || cols < 0) throw FormatError("bad tensor shape for " + name);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
    if (!in) throw FormatError("truncated tensor data for " + name + ": " + path.string());
    params_out.add(name, Eigen::MatrixXd(rm));
  }
  return archive;
}

}  // namespace pcl
