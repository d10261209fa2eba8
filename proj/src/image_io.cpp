#include "hazebayes/image_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace hazebayes {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---------------------------------------------------------------- PNG ----

ImageTensor load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("load_image: cannot open " + path.string());

  png_byte header[8] = {};
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw FormatError("load_image: corrupt PNG signature in " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("load_image: libpng allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("load_image: libpng allocation failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("load_image: corrupt PNG data in " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int depth = png_get_bit_depth(png, info);
  if (depth != 8 && depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("load_image: unsupported PNG bit depth " + std::to_string(depth) +
                      " in " + path.string());
  }
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("load_image: unsupported PNG channel count " +
                      std::to_string(channels) + " in " + path.string());
  }
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<png_byte> pixels(row_bytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor out(h, w, channels);
  const std::size_t n = out.size();
  if (depth == 8) {
    for (std::size_t i = 0; i < n; ++i) {
      out.data()[i] = static_cast<double>(pixels[i]) / 255.0;
    }
  } else {
    // 16-bit PNG samples are big-endian.
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned hi = pixels[2 * i];
      const unsigned lo = pixels[2 * i + 1];
      out.data()[i] = static_cast<double>((hi << 8) | lo) / 65535.0;
    }
  }
  return out;
}

void save_png(const ImageTensor& t, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("save_image: cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("save_image: libpng allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("save_image: libpng allocation failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_image: PNG write failure for " + path.string());
  }

  png_init_io(png, fp.get());
  const int color = t.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, t.width(), t.height(), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t row_len = static_cast<std::size_t>(t.width()) * t.channels();
  std::vector<png_byte> row(row_len);
  for (int y = 0; y < t.height(); ++y) {
    const double* src = t.data() + static_cast<std::size_t>(y) * row_len;
    for (std::size_t i = 0; i < row_len; ++i) {
      const double v = std::min(1.0, std::max(0.0, src[i]));
      row[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------- PNM ----

// Reads one whitespace-delimited token, skipping '#' comment lines. The
// delimiter after the token is left in the stream so the caller can consume
// the single whitespace byte that separates a header from its payload.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c != EOF) in.unget();
  return tok;
}

int pnm_int(std::istream& in, const char* what, const std::string& file) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("load_image: corrupt PNM header (") + what + ") in " + file);
  }
}

ImageTensor load_pnm(std::ifstream& in, const std::string& magic,
                     const std::filesystem::path& path) {
  const int channels = magic == "P6" ? 3 : 1;
  const int w = pnm_int(in, "width", path.string());
  const int h = pnm_int(in, "height", path.string());
  const int maxval = pnm_int(in, "maxval", path.string());
  if (maxval != 255 && maxval != 65535) {
    throw FormatError("load_image: unsupported PNM bit depth (maxval " +
                      std::to_string(maxval) + ") in " + path.string());
  }
  in.get();  // single whitespace after maxval

  const std::size_t n = static_cast<std::size_t>(h) * w * channels;
  const std::size_t bytes = maxval == 255 ? n : 2 * n;
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw IoError("load_image: truncated PNM payload in " + path.string());
  }

  ImageTensor out(h, w, channels);
  if (maxval == 255) {
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = buf[i] / 255.0;
  } else {
    // 16-bit PNM samples are big-endian.
    for (std::size_t i = 0; i < n; ++i) {
      out.data()[i] = ((buf[2 * i] << 8) | buf[2 * i + 1]) / 65535.0;
    }
  }
  return out;
}

void save_pnm(const ImageTensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_image: cannot open " + path.string() + " for writing");
  out << (t.channels() == 3 ? "P6" : "P5") << "\n"
      << t.width() << " " << t.height() << "\n255\n";
  std::vector<unsigned char> buf(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, t.data()[i]));
    buf[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_image: write failure for " + path.string());
}

// ---------------------------------------------------------------- PFM ----

void byteswap4(unsigned char* p) {
  std::swap(p[0], p[3]);
  std::swap(p[1], p[2]);
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("load_image: cannot open " + path.string());
  char magic[2] = {};
  probe.read(magic, 2);
  if (probe.gcount() != 2) throw FormatError("load_image: corrupt header in " + path.string());

  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
    probe.close();
    return load_png(path);
  }
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
    return load_pnm(probe, std::string(magic, 2), path);
  }
  throw FormatError("load_image: unrecognized format in " + path.string());
}

void save_image(const ImageTensor& t, const std::filesystem::path& path) {
  if (path.extension() == ".png") {
    save_png(t, path);
  } else {
    save_pnm(t, path);
  }
}

ImageTensor load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_pfm: cannot open " + path.string());

  const std::string magic = pnm_token(in);
  if (magic != "PF" && magic != "Pf") {
    throw FormatError("load_pfm: malformed header (magic '" + magic + "') in " + path.string());
  }
  const int channels = magic == "PF" ? 3 : 1;
  const int w = pnm_int(in, "width", path.string());
  const int h = pnm_int(in, "height", path.string());
  const std::string scale_tok = pnm_token(in);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError("load_pfm: malformed scale field in " + path.string());
  }
  if (scale == 0.0) throw FormatError("load_pfm: zero scale field in " + path.string());
  const bool little_endian = scale < 0.0;
  in.get();  // single whitespace after scale

  const std::size_t n = static_cast<std::size_t>(h) * w * channels;
  std::vector<unsigned char> buf(4 * n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw FormatError("load_pfm: truncated payload in " + path.string());
  }

  const bool host_little = std::endian::native == std::endian::little;
  if (little_endian != host_little) {
    for (std::size_t i = 0; i < n; ++i) byteswap4(buf.data() + 4 * i);
  }

  // PFM scanlines run bottom-to-top.
  ImageTensor out(h, w, channels);
  const std::size_t row_len = static_cast<std::size_t>(w) * channels;
  for (int y = 0; y < h; ++y) {
    const unsigned char* src = buf.data() + 4 * row_len * (h - 1 - y);
    double* dst = out.data() + row_len * y;
    for (std::size_t i = 0; i < row_len; ++i) {
      float f;
      std::memcpy(&f, src + 4 * i, 4);
      if (!std::isfinite(f)) throw FormatError("load_pfm: non-finite sample in " + path.string());
      dst[i] = static_cast<double>(f);
    }
  }
  return out;
}

void save_pfm(const ImageTensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_pfm: cannot open " + path.string() + " for writing");
  out << (t.channels() == 3 ? "PF" : "Pf") << "\n"
      << t.width() << " " << t.height() << "\n-1.0\n";

  const bool host_little = std::endian::native == std::endian::little;
  const std::size_t row_len = static_cast<std::size_t>(t.width()) * t.channels();
  std::vector<unsigned char> row(4 * row_len);
  for (int y = t.height() - 1; y >= 0; --y) {
    const double* src = t.data() + row_len * static_cast<std::size_t>(y);
    for (std::size_t i = 0; i < row_len; ++i) {
      const float f = static_cast<float>(src[i]);
      std::memcpy(row.data() + 4 * i, &f, 4);
      if (!host_little) byteswap4(row.data() + 4 * i);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("save_pfm: write failure for " + path.string());
}

}  // namespace hazebayes
