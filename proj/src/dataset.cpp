#include "clickcode/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "clickcode/error.hpp"
#include "text_util.hpp"

namespace clickcode {

namespace fs = std::filesystem;
using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::split;
using detail::trim;

ClickDataset::ClickDataset(std::vector<ClickRecord> clicks, std::size_t n)
    : clicks_(std::move(clicks)), n_(clicks_.empty() ? n : clicks_.front().samples.size()) {
  for (std::size_t i = 0; i < clicks_.size(); ++i) {
    const auto& c = clicks_[i];
    if (c.samples.size() != n_)
      throw ShapeError("click " + std::to_string(i) + " has " + std::to_string(c.samples.size()) +
                       " samples, expected " + std::to_string(n_));
    if (!(c.range_m >= 0.0) || !std::isfinite(c.range_m))
      throw ConfigError("click " + std::to_string(i) + ": range_m must be finite and >= 0");
    if (!(c.azimuth_rad >= -std::numbers::pi && c.azimuth_rad < std::numbers::pi))
      throw ConfigError("click " + std::to_string(i) + ": azimuth_rad must lie in [-pi, pi)");
    ++per_hydrophone_[c.hydrophone_id];
  }
}

std::vector<int> ClickDataset::hydrophone_ids() const {
  std::vector<int> ids;
  ids.reserve(per_hydrophone_.size());
  for (const auto& [id, count] : per_hydrophone_) ids.push_back(id);
  return ids;
}

ClickDataset ClickDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<ClickRecord> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(clicks_.at(i));
  return ClickDataset(std::move(out), n_);
}

ClickFormat parse_click_format(const std::string& name) {
  if (name == "csv") return ClickFormat::csv;
  if (name == "binary" || name == "bin") return ClickFormat::binary;
  if (name == "wav" || name == "wav_directory") return ClickFormat::wav_directory;
  throw ConfigError("unknown click format '" + name + "'");
}

ClickFormat infer_click_format(const fs::path& path) {
  if (fs::is_directory(path)) return ClickFormat::wav_directory;
  if (path.extension() == ".bin") return ClickFormat::binary;
  return ClickFormat::csv;
}

namespace {

ClickDataset load_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<ClickRecord> clicks;
  while (std::getline(is, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    auto fields = split(t, ',');
    if (!have_header) {
      if (fields.size() != 2 || trim(fields[0]) != "n")
        throw FormatError(path.string() + ": first line must be 'n,<int>'");
      auto v = parse_int<std::size_t>(fields[1]);
      if (!v || *v == 0) throw FormatError(path.string() + ": invalid n in header");
      n = *v;
      have_header = true;
      continue;
    }
    const std::size_t record = clicks.size();
    const std::string where =
        path.string() + ": record " + std::to_string(record) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() < 4) throw FormatError(where + ": expected metadata fields");
    if (fields.size() - 4 != n)
      throw ShapeError(where + ": has " + std::to_string(fields.size() - 4) + " samples, header declares " +
                       std::to_string(n));
    ClickRecord c;
    auto id = parse_int<std::int64_t>(fields[0]);
    auto hyd = parse_int<int>(fields[1]);
    auto r = parse_double(fields[2]);
    auto az = parse_double(fields[3]);
    if (!id || !hyd || !r || !az) throw FormatError(where + ": malformed metadata");
    c.click_id = *id;
    c.hydrophone_id = *hyd;
    c.range_m = *r;
    c.azimuth_rad = *az;
    c.samples.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      auto v = parse_double(fields[4 + s]);
      if (!v) throw FormatError(where + ": malformed sample " + std::to_string(s));
      c.samples[s] = *v;
    }
    clicks.push_back(std::move(c));
  }
  return ClickDataset(std::move(clicks), n);
}

constexpr std::string_view kClickMagic = "CCK1";

ClickDataset load_binary(const fs::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  detail::expect_magic(is, kClickMagic, what);
  const auto count = detail::read_u32(is, what);
  const auto n = detail::read_u32(is, what);
  std::vector<ClickRecord> clicks(count);
  for (auto& c : clicks) {
    c.click_id = detail::read_pod<std::int64_t>(is, what);
    c.hydrophone_id = detail::read_pod<std::int32_t>(is, what);
    c.range_m = detail::read_f64(is, what);
    c.azimuth_rad = detail::read_f64(is, what);
    c.samples.resize(n);
    detail::read_f64s(is, c.samples.data(), n, what);
  }
  return ClickDataset(std::move(clicks), n);
}

ClickDataset load_wav_directory(const fs::path& dir, std::size_t n) {
  const auto meta = dir / "metadata.csv";
  std::ifstream is(meta);
  if (!is) throw IoError("cannot open sidecar '" + meta.string() + "'");
  std::string line;
  std::vector<ClickRecord> clicks;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    auto fields = split(t, ',');
    if (header) {
      header = false;
      if (trim(fields[0]) == "filename") continue;
    }
    const std::string where = meta.string() + ": record " + std::to_string(clicks.size());
    if (fields.size() != 4) throw FormatError(where + ": expected filename,hydrophone_id,range_m,azimuth_rad");
    auto hyd = parse_int<int>(fields[1]);
    auto r = parse_double(fields[2]);
    auto az = parse_double(fields[3]);
    if (!hyd || !r || !az) throw FormatError(where + ": malformed metadata");
    ClickRecord c;
    c.click_id = static_cast<std::int64_t>(clicks.size());
    c.hydrophone_id = *hyd;
    c.range_m = *r;
    c.azimuth_rad = *az;
    c.samples = fit_to_length(read_wav(dir / std::string(trim(fields[0]))).samples, n);
    clicks.push_back(std::move(c));
  }
  return ClickDataset(std::move(clicks), n);
}

}  // namespace

ClickDataset load_clicks(const fs::path& path, ClickFormat format, std::size_t wav_n) {
  if (!fs::exists(path)) throw IoError("'" + path.string() + "' does not exist");
  switch (format) {
    case ClickFormat::csv:
      return load_csv(path);
    case ClickFormat::binary:
      return load_binary(path);
    case ClickFormat::wav_directory:
      return load_wav_directory(path, wav_n);
  }
  throw ConfigError("unknown click format");
}

void save_clicks(const ClickDataset& data, const fs::path& path, ClickFormat format) {
  if (format == ClickFormat::wav_directory) throw ConfigError("save_clicks: wav output is not supported");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto os = detail::open_out(path.string());
  if (format == ClickFormat::binary) {
    detail::write_magic(os, kClickMagic);
    detail::write_u32(os, static_cast<std::uint32_t>(data.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(data.n()));
    for (const auto& c : data.clicks()) {
      detail::write_pod<std::int64_t>(os, c.click_id);
      detail::write_pod<std::int32_t>(os, c.hydrophone_id);
      detail::write_f64(os, c.range_m);
      detail::write_f64(os, c.azimuth_rad);
      detail::write_f64s(os, c.samples.data(), c.samples.size());
    }
  } else {
    os << "n," << data.n() << '\n';
    std::string row;
    for (const auto& c : data.clicks()) {
      row.clear();
      row += std::to_string(c.click_id) + ',' + std::to_string(c.hydrophone_id) + ',' +
             format_double(c.range_m) + ',' + format_double(c.azimuth_rad);
      for (double s : c.samples) {
        row += ',';
        row += format_double(s);
      }
      row += '\n';
      os << row;
    }
  }
  detail::finish_write(os, path.string());
}

std::vector<double> fit_to_length(const std::vector<double>& samples, std::size_t n) {
  if (samples.size() == n) return samples;
  if (samples.size() > n) {
    const std::size_t start = (samples.size() - n) / 2;
    return {samples.begin() + static_cast<std::ptrdiff_t>(start),
            samples.begin() + static_cast<std::ptrdiff_t>(start + n)};
  }
  std::vector<double> out(n, 0.0);
  const std::size_t left = (n - samples.size()) / 2;
  std::copy(samples.begin(), samples.end(), out.begin() + static_cast<std::ptrdiff_t>(left));
  return out;
}

WavAudio read_wav(const fs::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  char tag[4];
  detail::read_exact(is, tag, 4, what);
  if (std::string_view(tag, 4) != "RIFF") throw FormatError(what + ": not a RIFF file");
  detail::read_u32(is, what);
  detail::read_exact(is, tag, 4, what);
  if (std::string_view(tag, 4) != "WAVE") throw FormatError(what + ": not a WAVE file");

  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (true) {
    detail::read_exact(is, tag, 4, what);
    const auto size = detail::read_u32(is, what);
    const std::string_view id(tag, 4);
    if (id == "fmt ") {
      if (size < 16) throw FormatError(what + ": short fmt chunk");
      audio_format = detail::read_pod<std::uint16_t>(is, what);
      channels = detail::read_pod<std::uint16_t>(is, what);
      rate = detail::read_u32(is, what);
      detail::read_u32(is, what);  // byte rate
      detail::read_pod<std::uint16_t>(is, what);  // block align
      bits = detail::read_pod<std::uint16_t>(is, what);
      std::uint32_t consumed = 16;
      if (audio_format == 0xFFFE && size >= 40) {
        detail::read_pod<std::uint16_t>(is, what);  // cbSize
        detail::read_pod<std::uint16_t>(is, what);  // valid bits
        detail::read_u32(is, what);                 // channel mask
        audio_format = detail::read_pod<std::uint16_t>(is, what);
        consumed += 10;
      }
      is.seekg(size - consumed + (size & 1u), std::ios::cur);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(what + ": data chunk before fmt chunk");
      if (channels != 1) throw FormatError(what + ": only mono WAV is supported");
      std::vector<char> raw(size);
      detail::read_exact(is, raw.data(), size, what);
      const std::size_t width = bits / 8;
      if (width == 0) throw FormatError(what + ": invalid bit depth");
      WavAudio out;
      out.sample_rate = rate;
      out.samples.resize(size / width);
      const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
      for (std::size_t i = 0; i < out.samples.size(); ++i, p += width) {
        double v = 0.0;
        if (audio_format == 1) {
          switch (bits) {
            case 8:
              v = (static_cast<int>(p[0]) - 128) / 128.0;
              break;
            case 16: {
              std::int16_t s;
              std::memcpy(&s, p, 2);
              v = s / 32768.0;
              break;
            }
            case 24: {
              std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
              if (s & 0x800000) s -= 0x1000000;
              v = s / 8388608.0;
              break;
            }
            case 32: {
              std::int32_t s;
              std::memcpy(&s, p, 4);
              v = s / 2147483648.0;
              break;
            }
            default:
              throw FormatError(what + ": unsupported PCM bit depth " + std::to_string(bits));
          }
        } else if (audio_format == 3) {
          if (bits == 32) {
            float f;
            std::memcpy(&f, p, 4);
            v = f;
          } else if (bits == 64) {
            std::memcpy(&v, p, 8);
          } else {
            throw FormatError(what + ": unsupported float bit depth");
          }
        } else {
          throw FormatError(what + ": unsupported WAV encoding " + std::to_string(audio_format));
        }
        out.samples[i] = v;
      }
      return out;
    } else {
      is.seekg(size + (size & 1u), std::ios::cur);
    }
  }
}

void write_wav_pcm16(const fs::path& path, const std::vector<double>& samples, std::uint32_t sample_rate) {
  auto os = detail::open_out(path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  detail::write_magic(os, "RIFF");
  detail::write_u32(os, 36 + data_bytes);
  detail::write_magic(os, "WAVE");
  detail::write_magic(os, "fmt ");
  detail::write_u32(os, 16);
  detail::write_pod<std::uint16_t>(os, 1);
  detail::write_pod<std::uint16_t>(os, 1);
  detail::write_u32(os, sample_rate);
  detail::write_u32(os, sample_rate * 2);
  detail::write_pod<std::uint16_t>(os, 2);
  detail::write_pod<std::uint16_t>(os, 16);
  detail::write_magic(os, "data");
  detail::write_u32(os, data_bytes);
  for (double s : samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    detail::write_pod<std::int16_t>(os, static_cast<std::int16_t>(std::lround(clamped * 32767.0)));
  }
  detail::finish_write(os, path.string());
}

}  // namespace clickcode
