// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

namespace mdf {

std::string jpeg_codec_id() {
  return "libjpeg/" + std::to_string(JPEG_LIB_VERSION) + " baseline";
}

namespace {

uint8_t to_byte(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::floor(v * 255.0 + 0.5));
}

std::vector<uint8_t> image_to_bytes(const Image& img) {
  std::vector<uint8_t> bytes(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) bytes[i] = to_byte(img.data[i]);
  return bytes;
}

Image bytes_to_image(const uint8_t* bytes, int h, int w, int c) {
  Image img(h, w, c);
  size_t n = img.data.size();
  for (size_t i = 0; i < n; ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

std::vector<uint8_t> encode_jpeg(const Image& img, int quality) {
  std::vector<uint8_t> rgb = image_to_bytes(img);

  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;

  unsigned char* out_buf = nullptr;
  unsigned long out_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (out_buf) free(out_buf);
    throw RuntimeError(std::string("JPEG encode failed: ") + jerr.message);
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out_buf, &out_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.w);
  cinfo.image_height = static_cast<JDIMENSION>(img.h);
  cinfo.input_components = img.c;
  cinfo.in_color_space = img.c == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE /* force baseline */);
  jpeg_start_compress(&cinfo, TRUE);
  size_t stride = static_cast<size_t>(img.w) * img.c;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = rgb.data() + cinfo.next_scanline * stride;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<uint8_t> out(out_buf, out_buf + out_size);
  free(out_buf);
  return out;
}

Image decode_jpeg(const uint8_t* data, size_t size) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;

  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw RuntimeError(std::string("JPEG decode failed: ") + jerr.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(data), static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE) cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  int c = cinfo.output_components == 1 ? 1 : 3;
  int w = static_cast<int>(cinfo.output_width);
  int h = static_cast<int>(cinfo.output_height);
  std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * c);
  size_t stride = static_cast<size_t>(w) * c;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = bytes.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return bytes_to_image(bytes.data(), h, w, c);
}

Image load_png_file(FILE* fp, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RuntimeError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw RuntimeError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RuntimeError("PNG decode failed: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_byte color = png_get_color_type(png, info);
  png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  int c = static_cast<int>(png_get_channels(png, info));
  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RuntimeError("PNG has unsupported channel count after expansion: " + path);
  }
  std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * c);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<size_t>(y) * w * c;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return bytes_to_image(bytes.data(), h, w, c);
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

Image load_image(const std::string& path) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw RuntimeError("cannot open image file: " + path);
  uint8_t magic[8] = {0};
  size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
  std::rewind(fp.get());
  if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) {
    return load_png_file(fp.get(), path);
  }
  if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) {
    std::fseek(fp.get(), 0, SEEK_END);
    long sz = std::ftell(fp.get());
    std::rewind(fp.get());
    std::vector<uint8_t> data(static_cast<size_t>(sz));
    if (std::fread(data.data(), 1, data.size(), fp.get()) != data.size())
      throw RuntimeError("short read: " + path);
    return decode_jpeg(data.data(), data.size());
  }
  throw RuntimeError("unrecognized image format (expect PNG or JPEG): " + path);
}

void save_png(const Image& img, const std::string& path) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw RuntimeError("cannot write image file: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RuntimeError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw RuntimeError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeError("PNG encode failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.w, img.h, 8,
               img.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> bytes = image_to_bytes(img);
  for (int y = 0; y < img.h; ++y)
    png_write_row(png, bytes.data() + static_cast<size_t>(y) * img.w * img.c);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_jpeg(const Image& img, const std::string& path, int quality) {
  require(quality >= 1 && quality <= 100, "save_jpeg: quality must be in [1,100]");
  std::vector<uint8_t> data = encode_jpeg(clamp01(img), quality);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write image file: " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Image jpeg_roundtrip(const Image& img, int quality) {
  require(quality >= 1 && quality <= 100, "jpeg_roundtrip: quality must be in [1,100]");
  std::vector<uint8_t> data = encode_jpeg(clamp01(img), quality);
  Image out = decode_jpeg(data.data(), data.size());
  require(out.h == img.h && out.w == img.w, "jpeg_roundtrip: codec changed dimensions");
  return out;
}

}  // namespace mdf
