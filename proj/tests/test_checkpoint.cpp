#include "deltanet/checkpoint.hpp"
#include "deltanet/network.hpp"

#include "fixtures.hpp"
#include "gradcheck.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>

using namespace deltanet;
using namespace deltanet::testing;

namespace {

// Independent byte-level writer for the documented layout.
struct Bytes {
  std::vector<std::uint8_t> b;
  void u8(std::uint8_t v) { b.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) { b.insert(b.end(), s.begin(), s.end()); }
};

std::vector<std::uint8_t> golden_bytes() {
  Bytes w;
  w.str("DMNC");
  w.u32(1);
  w.u32(2);
  w.u32(13);
  w.str("layer0.weight");
  w.u8(1);
  w.u32(2);
  w.u32(2);
  w.u32(1);
  w.u8(0);
  w.f32(1.5f);
  w.f32(-2.0f);
  w.u32(19);
  w.str("layer0.running_mean");
  w.u8(0);
  w.u32(1);
  w.u32(1);
  w.u8(0);
  w.f32(0.25f);
  return w.b;
}

ParamStore<float> golden_store() {
  ParamStore<float> p;
  Tensor<float> w({2, 1});
  w[0] = 1.5f;
  w[1] = -2.0f;
  p.add("layer0.weight", w);
  p.add("layer0.running_mean", Tensor<float>({1}, 0.25f), false);
  return p;
}

template <typename Scalar>
bool same(const ParamStore<Scalar>& a, const ParamStore<Scalar>& b) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (const auto& e : a) {
    if (e.name != ib->name || e.trainable != ib->trainable || e.value.shape() != ib->value.shape())
      return false;
    if (std::memcmp(e.value.data(), ib->value.data(), sizeof(Scalar) * e.value.size()) != 0)
      return false;
    ++ib;
  }
  return true;
}

CheckpointErrc decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint<float>(bytes);
  } catch (const CheckpointError& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return CheckpointErrc::Io;
}

}  // namespace

TEST_CASE("encoding matches the hand-built layout and the committed golden file") {
  const auto bytes = encode_checkpoint(golden_store());
  CHECK(bytes == golden_bytes());
  CHECK(bytes == read_bytes(fixture_path("golden.dmnc")));
  CHECK(same(decode_checkpoint<float>(bytes), golden_store()));
}

TEST_CASE("round trip is bit-identical") {
  Rng rng(5);
  ParamStore<float> f;
  ParamStore<double> d;
  for (int i = 0; i < 6; ++i) {
    const Shape shape{1 + static_cast<Index>(rng.below(4)), 1 + static_cast<Index>(rng.below(5))};
    const auto t = random_tensor(shape, rng, -100, 100);
    f.add("p" + std::to_string(i), t.cast<float>(), i % 2 == 0);
    d.add("p" + std::to_string(i), t, i % 3 == 0);
  }
  f.at("p0").value[0] = -0.0f;
  f.at("p1").value[0] = std::numeric_limits<float>::denorm_min();
  CHECK(same(decode_checkpoint<float>(encode_checkpoint(f)), f));
  CHECK(same(decode_checkpoint<double>(encode_checkpoint(d)), d));

  TempDir dir("ckpt");
  save_checkpoint(f, dir / "a.dmnc");
  CHECK(same(load_checkpoint<float>(dir / "a.dmnc"), f));
  save_checkpoint(decode_checkpoint<float>(read_bytes(dir / "a.dmnc")), dir / "b.dmnc");
  CHECK(read_bytes(dir / "a.dmnc") == read_bytes(dir / "b.dmnc"));
}

TEST_CASE("malformed files are rejected with the right error") {
  const auto good = golden_bytes();
  for (std::size_t n = 0; n < good.size(); ++n) {
    CAPTURE(n);
    CHECK(decode_error({good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n)}) ==
          CheckpointErrc::Truncated);
  }
  auto bad = good;
  bad[0] = 'X';
  CHECK(decode_error(bad) == CheckpointErrc::BadMagic);
  bad = good;
  bad[4] = 2;
  CHECK(decode_error(bad) == CheckpointErrc::VersionMismatch);
  bad = good;
  bad[12 + 4 + 13 + 1 + 4 + 8] = 9;  // dtype tag of the first entry
  CHECK(decode_error(bad) == CheckpointErrc::BadDtype);
  bad = good;
  bad.push_back(0);
  CHECK(decode_error(bad) == CheckpointErrc::Malformed);
  CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent/dir/x.dmnc"), CheckpointError);
}

TEST_CASE("a saved network reloads into an identical network") {
  ArchSpec spec;
  spec.alpha = 0.25;
  Network<float> a(spec, 1), b(spec, 2);
  Rng rng(3);
  // Move the running statistics away from their initial values first.
  const auto batch = random_tensor({4, 3, 32, 32}, rng).cast<float>();
  ForwardMode train = ForwardMode::train();
  a.forward(batch, train, rng);
  TempDir dir("net");
  save_checkpoint(a.params(), dir / "n.dmnc");
  b.load_params(load_checkpoint<float>(dir / "n.dmnc"));
  const auto la = a.forward(batch, ForwardMode::eval(), rng);
  const auto lb = b.forward(batch, ForwardMode::eval(), rng);
  CHECK((la.array() == lb.array()).all());
}
