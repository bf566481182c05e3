#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "helm/vectors.hpp"

using namespace helm;
using proto::json;

namespace {

json shipped() {
  std::ifstream is(HELM_VECTOR_FILE);
  return json::parse(is);
}

}  // namespace

TEST(Vectors, ShippedFileIsCurrent) {
  EXPECT_EQ(shipped(), proto::test_vectors()) << "regenerate with: helmsim vectors --out docs/test-vectors.json";
}

TEST(Vectors, EveryVectorDecodesAsRecorded) {
  const json v = shipped();
  ASSERT_GT(v.size(), 60u);
  std::set<std::string> types;
  for (const json& e : v) {
    SCOPED_TRACE(e["name"].get<std::string>());
    const proto::Bytes frame = proto::from_hex(e["hex"]);
    const auto r = proto::decode(frame);
    if (e.contains("error")) {
      ASSERT_TRUE(std::holds_alternative<proto::DecodeError>(r));
      EXPECT_EQ(proto::to_string(std::get<proto::DecodeError>(r)), e["error"].get<std::string>());
      continue;
    }
    ASSERT_TRUE(std::holds_alternative<proto::Decoded>(r));
    const auto& d = std::get<proto::Decoded>(r);
    EXPECT_EQ(d.seq, e["seq"].get<int>());
    EXPECT_EQ(proto::to_json(d.message), e["message"]);
    EXPECT_EQ(proto::encode(d.message, d.seq), frame);
    types.insert(e["message"]["type"]);
  }
  EXPECT_EQ(types.size(), 10u);  // every message kind plus opaque
}

TEST(Vectors, HexHelpers) {
  const proto::Bytes b{0x00, 0xFA, 0x7F, 0xFF};
  EXPECT_EQ(proto::to_hex(b), "00fa7fff");
  EXPECT_EQ(proto::from_hex("00fa7fff"), b);
  EXPECT_THROW(proto::from_hex("abc"), std::invalid_argument);
}
