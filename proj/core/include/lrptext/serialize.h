// SPDX-License-Identifier: Apache-2.0
//
// Model container:
//
//   offset 0   8 bytes   magic "LRPMODEL"
//   offset 8   4 bytes   header length H, unsigned little-endian
//   offset 12  H bytes   JSON header (format version, architecture, layer
//                        shapes, seed, dtype, blob size, CRC-32 of the blob)
//   offset 12+H          parameter blob: little-endian reals (32-bit by
//                        default) in layer order, then parameter order
//
// The JSON header is written with sorted keys, so identical models produce
// byte-identical files.

#ifndef LRPTEXT_SERIALIZE_H_
#define LRPTEXT_SERIALIZE_H_

#include <filesystem>
#include <string>

#include "lrptext/model.h"

namespace lrptext {

inline constexpr int kModelFormatVersion = 1;

enum class BlobType { kFloat32, kFloat64 };

struct SaveOptions {
  BlobType dtype = BlobType::kFloat32;
};

// In-memory encoding; SaveModel writes exactly these bytes.
std::string EncodeModel(const Model &model, const SaveOptions &options = {});
// Throws FormatError (bad magic or header), VersionError (unsupported
// format version) or ChecksumError (truncated or corrupted blob).
Model DecodeModel(const std::string &bytes);

void SaveModel(const Model &model, const std::filesystem::path &path,
               const SaveOptions &options = {});
Model LoadModel(const std::filesystem::path &path);

}  // namespace lrptext

#endif  // LRPTEXT_SERIALIZE_H_
