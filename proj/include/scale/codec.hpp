#pragma once

// Byte encodings of protocol messages and of the cloud snapshot. All
// integers are big-endian; every variable-length field is length-prefixed.

#include <memory>
#include <optional>

#include "scale/bytes.hpp"
#include "scale/cloud_store.hpp"
#include "scale/types.hpp"

namespace scale::codec {

inline constexpr std::uint8_t kProtocolVersion = 1;

Bytes encode_upload(const UploadBundle& b);
UploadBundle decode_upload(ByteView bytes);

Bytes encode_query(const EncryptedQuery& q);
EncryptedQuery decode_query(ByteView bytes);

Bytes encode_results(const std::vector<ResultEntry>& rs);
std::vector<ResultEntry> decode_results(ByteView bytes);

Bytes encode_insert(const InsertBundle& b);
InsertBundle decode_insert(ByteView bytes);

Bytes encode_delete(const DeleteRequest& r);
DeleteRequest decode_delete(ByteView bytes);

// Whole-database image. Loading rebuilds every tree in stored order
// without a single ORE compare, into the stored index variant unless
// another one is requested.
Bytes save_snapshot(const CloudDatabase& db);
std::unique_ptr<CloudDatabase> load_snapshot(
    ByteView bytes, std::optional<IndexVariant> variant = std::nullopt);

}  // namespace scale::codec
