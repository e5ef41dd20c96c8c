#include "byteio.hpp"
#include "gml/segmodel.hpp"

namespace gml {

namespace {
constexpr std::string_view kMagic = "GMLW";
constexpr std::uint16_t kVersion = 1;
}  // namespace

std::size_t checkpoint_size(const ArchSpec& arch) { return kCheckpointHeaderBytes + 8 * arch.param_count(); }

std::vector<std::uint8_t> checkpoint_write(const ModelWeights& w) {
  w.arch.validate();
  if (w.params.size() != w.arch.param_count())
    throw Error(ErrorCode::IncompatibleModels, "params length does not match architecture");
  if (!w.all_finite()) throw Error(ErrorCode::NonFiniteModel, "refusing to checkpoint non-finite params");

  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u16(kVersion);
  out.u8(static_cast<std::uint8_t>(w.arch.spatial_rank));
  out.u16(static_cast<std::uint16_t>(w.arch.in_channels));
  out.u16(static_cast<std::uint16_t>(w.arch.hidden_channels));
  out.u16(static_cast<std::uint16_t>(w.arch.kernel));
  out.u64(w.params.size());
  for (double v : w.params) out.f64(v);
  return out.take();
}

ModelWeights checkpoint_read(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, ErrorCode::CorruptCheckpoint);
  if (in.bytes(4) != kMagic) in.fail("bad magic");
  if (const auto version = in.u16(); version != kVersion) in.fail("unsupported version " + std::to_string(version));

  ModelWeights w;
  w.arch.spatial_rank = in.u8();
  w.arch.in_channels = in.u16();
  w.arch.hidden_channels = in.u16();
  w.arch.kernel = in.u16();
  try {
    w.arch.validate();
  } catch (const Error& e) {
    in.fail(std::string("bad architecture: ") + e.what());
  }
  const std::uint64_t count = in.u64();
  if (count != w.arch.param_count()) in.fail("param_count disagrees with architecture");
  if (in.remaining() != 8 * count) in.fail("payload length " + std::to_string(in.remaining()) + " != " + std::to_string(8 * count));
  w.params.resize(count);
  for (auto& v : w.params) v = in.f64();
  return w;
}

void checkpoint_save(const std::filesystem::path& path, const ModelWeights& w) {
  detail::write_file(path, checkpoint_write(w));
}

ModelWeights checkpoint_load(const std::filesystem::path& path) {
  return checkpoint_read(detail::read_file(path));
}

}  // namespace gml
