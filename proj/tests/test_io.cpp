#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "opsub/io.hpp"
#include "oracles.hpp"

using namespace opsub;

namespace {

Family sample_family(std::uint64_t seed, Index count = 3) {
  std::mt19937_64 rng(seed);
  return oracle::random_family(rng, 5, 4, count, 3);
}

bool same(const Family& a, const Family& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l)
    if (a[l].alphas() != b[l].alphas() || a[l].betas() != b[l].betas()) return false;
  return true;
}

}  // namespace

TEST(Io, SingleOperatorFamilyRoundTrips) {
  Family f = sample_family(81, 1);
  for (auto enc : {Encoding::Binary, Encoding::Text}) {
    const std::string bytes = encode_family(f, enc);
    Family back = decode_family(bytes);
    EXPECT_TRUE(same(f, back));
    EXPECT_EQ(encode_family(back, enc), bytes);
  }
}

TEST(Io, HeaderLayout) {
  Family f = sample_family(82, 2);
  EXPECT_EQ(encode_family(f, Encoding::Text).rfind("OPFAM1 2\nOPF1 5 4 ", 0), 0u);
  EXPECT_EQ(encode_family(f, Encoding::Binary).rfind("OPFAM1 2 LE64\nOPF1 5 4 ", 0), 0u);
  const std::string op = encode_operator(f[0], Encoding::Binary);
  const std::size_t header = op.find('\n') + 1;
  EXPECT_EQ(op.size() - header, static_cast<std::size_t>(8 * (5 + 4) * f[0].rank_bound()));
}

TEST(Io, TextAndBinaryAgree) {
  Family f = sample_family(83);
  Family t = decode_family(encode_family(f, Encoding::Text));
  Family b = decode_family(encode_family(f, Encoding::Binary));
  for (std::size_t l = 0; l < f.size(); ++l) {
    const double scale = f[l].alphas().cwiseAbs().maxCoeff();
    EXPECT_LE((t[l].alphas() - b[l].alphas()).cwiseAbs().maxCoeff(), 1e-15 * scale);
    EXPECT_LE((t[l].betas() - b[l].betas()).cwiseAbs().maxCoeff(), 1e-15 * f[l].betas().cwiseAbs().maxCoeff());
  }
}

TEST(Io, TruncationNamesTheRecord) {
  Family f = sample_family(84);
  const std::string bytes = encode_family(f, Encoding::Binary);
  // Cut inside the second operator.
  const std::size_t second = bytes.find("OPF1", bytes.find("OPF1") + 1);
  try {
    decode_family(bytes.substr(0, second + 40));
    FAIL() << "expected TruncatedError";
  } catch (const TruncatedError& e) {
    EXPECT_EQ(e.record(), 1u);
    EXPECT_GE(e.offset(), second);
  }
  // Cut inside pair 1 of a single operator.
  const std::string op = encode_operator(f[0], Encoding::Text);
  const std::size_t line2 = op.find('\n', op.find('\n') + 1);
  try {
    decode_operator(op.substr(0, line2 + 3));
    FAIL() << "expected TruncatedError";
  } catch (const TruncatedError& e) {
    EXPECT_EQ(e.record(), 1u);
  }
  // Missing whole operator.
  EXPECT_THROW(decode_family(bytes.substr(0, second)), TruncatedError);
}

TEST(Io, MalformedHeaders) {
  EXPECT_THROW(decode_family("OPFAM2 1\n"), MalformedHeaderError);
  EXPECT_THROW(decode_family("OPFAM1\n"), MalformedHeaderError);
  EXPECT_THROW(decode_family("OPFAM1 x\n"), MalformedHeaderError);
  EXPECT_THROW(decode_family("OPFAM1 0\n"), MalformedHeaderError);
  EXPECT_THROW(decode_operator("OPF1 2 2 0\n"), MalformedHeaderError);
  EXPECT_THROW(decode_operator("OPF1 2 2 1"), MalformedHeaderError);
  EXPECT_THROW(decode_operator("OPF1 2 2 1 LE32\n"), MalformedHeaderError);
  // Mixed encodings inside one family.
  Family f = sample_family(85, 1);
  std::string mixed = "OPFAM1 1\n" + encode_operator(f[0], Encoding::Binary);
  EXPECT_THROW(decode_family(mixed), MalformedHeaderError);
}

TEST(Io, InconsistentShapesAndPayloads) {
  std::mt19937_64 rng(86);
  std::string bytes = "OPFAM1 2\n" + encode_operator(oracle::random_operator(rng, 3, 3, 1), Encoding::Text) +
                      encode_operator(oracle::random_operator(rng, 3, 4, 1), Encoding::Text);
  try {
    decode_family(bytes);
    FAIL() << "expected InconsistencyError";
  } catch (const InconsistencyError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
  EXPECT_THROW(decode_operator("OPF1 1 1 1\n1.0 abc\n"), MalformedPayloadError);
  EXPECT_THROW(decode_operator("OPF1 1 1 1\n1.0 2.0 3.0\n"), MalformedPayloadError);
}

TEST(Io, ModelRoundTrip) {
  std::mt19937_64 rng(87);
  Family f = oracle::random_family(rng, 6, 5, 3, 2);
  SubspaceModel model = als_fit(f, 2, 3, hosvd_init(f, 2, 3));
  for (auto enc : {Encoding::Binary, Encoding::Text}) {
    const std::string bytes = encode_model(model, enc);
    SubspaceModel back = decode_model(bytes);
    EXPECT_EQ(back.E.vectors(), model.E.vectors());
    EXPECT_EQ(back.F.vectors(), model.F.vectors());
    EXPECT_EQ(back.fit, model.fit);
    EXPECT_EQ(back.history, model.history);
    EXPECT_EQ(back.E.mode(), Mode::Output);
    EXPECT_EQ(back.F.mode(), Mode::Input);
    EXPECT_EQ(encode_model(back, enc), bytes);
  }
  std::string bad = encode_model(model, Encoding::Binary);
  EXPECT_THROW(decode_model(bad.substr(0, bad.size() - 5)), TruncatedError);
  EXPECT_THROW(decode_model("SSM1 2 2 3 1\n"), InconsistencyError);
}

TEST(Io, NonOrthonormalModelRejected) {
  EXPECT_THROW(decode_model("SSM1 2 1 1 1\n1 1\n1 0\n0 1 0\n"), InconsistencyError);
}

TEST(Io, HullRoundTrip) {
  std::mt19937_64 rng(88);
  Family f = oracle::random_family(rng, 6, 5, 4, 2);
  SubspaceModel model = hosvd_init(f, 2, 2);
  HullModel hull = build_hull(f, model);
  for (auto enc : {Encoding::Binary, Encoding::Text}) {
    const std::string bytes = encode_hull(hull, enc);
    HullModel back = decode_hull(bytes, model);
    ASSERT_EQ(back.size(), hull.size());
    for (Index l = 0; l < hull.size(); ++l)
      EXPECT_EQ(back.vertices[static_cast<std::size_t>(l)].gamma, hull.vertices[static_cast<std::size_t>(l)].gamma);
    EXPECT_EQ(back.gram, hull.gram);
    EXPECT_EQ(back.lipschitz, hull.lipschitz);
    EXPECT_TRUE(back.model.has_value());
    EXPECT_EQ(encode_hull(back, enc), bytes);
  }
  HullModel tampered = hull;
  tampered.gram(0, 1) += 1.0;
  EXPECT_THROW(decode_hull(encode_hull(tampered, Encoding::Binary)), InconsistencyError);
  SubspaceModel other = hosvd_init(f, 3, 2);
  EXPECT_THROW(decode_hull(encode_hull(hull, Encoding::Text), other), InconsistencyError);
}

TEST(Io, CorruptedInputsOnlyRaiseTypedErrors) {
  std::mt19937_64 rng(89);
  Family f = sample_family(89);
  SubspaceModel model = hosvd_init(f, 2, 2);
  HullModel hull = build_hull(f, model);
  const std::vector<std::string> sources = {
      encode_family(f, Encoding::Binary), encode_family(f, Encoding::Text),
      encode_model(model, Encoding::Binary), encode_model(model, Encoding::Text),
      encode_hull(hull, Encoding::Binary), encode_hull(hull, Encoding::Text)};
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t which = static_cast<std::size_t>(trial) % sources.size();
    std::string bytes = sources[which];
    std::uniform_int_distribution<std::size_t> at(0, bytes.size() - 1);
    if (trial % 2 == 0) {
      bytes.resize(at(rng));
    } else {
      for (int flips = 0; flips < 3; ++flips) bytes[at(rng)] = static_cast<char>(rng() & 0xff);
    }
    try {
      if (which < 2) decode_family(bytes);
      else if (which < 4) decode_model(bytes);
      else decode_hull(bytes);
    } catch (const Error&) {
    }
  }
  SUCCEED();
}

TEST(Io, FilesAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "opsub_io_test";
  std::filesystem::create_directories(dir);
  Family f = sample_family(90);
  const std::string path = (dir / "fam.opf").string();
  write_family(path, f);
  EXPECT_TRUE(same(read_family(path), f));
  EXPECT_TRUE(same(read_operators(path), f));
  write_operator(path, f[1], Encoding::Text);
  EXPECT_TRUE(same(read_operators(path), Family{f[1]}));
  EXPECT_THROW(read_family((dir / "missing").string()), FileError);

  std::vector<ExperimentRecord> records{{"HOSVD", 256, 0, 1.0}, {"ALS", 256, 3, 0.125}};
  EXPECT_EQ(encode_csv(records), "method,n,dimension,value\nHOSVD,256,0,1\nALS,256,3,0.125\n");
  std::filesystem::remove_all(dir);
}
