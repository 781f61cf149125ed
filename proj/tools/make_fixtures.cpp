// Writes the JSON fixtures under fixtures/ (or the directory in argv[1]).
// Everything is deterministic; rerunning reproduces the files byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "qdt/io.hpp"

using namespace qdt;
using io::json;

namespace {

std::filesystem::path dir;

void write(const std::string& name, const json& j) {
  std::ofstream(dir / name) << j.dump(2) << "\n";
}

HermitianMatrix projector(double x, cdouble y) {
  VectorXcd v(2);
  v << x, y;
  return Projector::normalized(v).matrix();
}

/// +-(E - Tr(E R) I) + delta I over the matrix units of the shape.
io::Assessment pinned(const JointStateMatrix& r, double delta = 1e-7) {
  const auto shape = r.shape();
  const auto id = BlockHermitian::identity(shape.blocks, shape.n);
  io::Assessment a{shape, {}};
  for (const auto& e : detail::matrix_unit_directions(shape)) {
    const auto c = e - r.expectation(e) * id;
    a.gambles.push_back(c + delta * id);
    a.gambles.push_back(-1.0 * c + delta * id);
  }
  return a;
}

io::Assessment single(std::initializer_list<HermitianMatrix> gs) {
  io::Assessment a{{1, gs.begin()->dim()}, {}};
  for (const auto& g : gs) a.gambles.emplace_back(std::vector<HermitianMatrix>{g});
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  dir = argc > 1 ? argv[1] : "fixtures";
  std::filesystem::create_directories(dir);

  // half a y-basis measurement for the first two prizes, the rest on z
  const auto py = projector(1.0, cdouble(0, 1)), my = projector(1.0, cdouble(0, -1));
  const auto half = HermitianMatrix::identity(2) * 0.5;
  const auto lottery = QHLottery::from_blocks({0.5 * py, 0.5 * my, half});
  write("lottery_valid.json", io::to_json(lottery));
  auto off = io::to_json(lottery);
  off["blocks"][2] = io::to_json(HermitianMatrix::diagonal({0.6, 0.5}));
  write("lottery_invalid_sum.json", off);
  std::ofstream(dir / "malformed.json") << "{\"m\": 2, \"n\": 1, \"blocks\": [\n";

  write("coherence_single.json", io::to_json(single({HermitianMatrix::diagonal({1, -1})})));
  write("coherence_incoherent.json",
        io::to_json(single({HermitianMatrix::diagonal({1, -2}), HermitianMatrix::diagonal({-2, 1})})));
  // entries near the top of the double range: the solver cannot recover
  const double huge = 1e300;
  MatrixXd third(2, 2);
  third << 1, huge, huge, -huge;
  write("coherence_overflow.json",
        io::to_json(single({HermitianMatrix::diagonal({huge, -1}), HermitianMatrix::diagonal({-1, huge}),
                            build_hermitian(third)})));
  write("coherence_empty.json", io::to_json(io::Assessment{{1, 2}, {}}));

  const auto r = JointStateMatrix::from_density(HermitianMatrix::diagonal({0.6, 0.4}));
  const auto e0 = HermitianMatrix::diagonal({1, 0}), e1 = HermitianMatrix::diagonal({0, 1});
  const auto p = QHLottery::from_blocks({e0, e1});
  const auto q = QHLottery::from_blocks({e1, e0});
  write("prefer_state.json", io::to_json(io::PreferenceQuery{io::Model(r), p, q}));
  const auto near = pinned(r);
  write("prefer_sdg.json", io::to_json(io::PreferenceQuery{io::Model(near), p, q}));
  write("represent_near_maximal.json", io::to_json(near));

  const std::vector<double> pw{0.3, 0.7};
  const auto rho = 0.7 * py + 0.3 * my;
  write("factorize_product.json", io::to_json(JointStateMatrix::product(pw, rho)));
  write("factorize_split.json", io::to_json(JointStateMatrix::from_blocks(BlockHermitian({0.5 * e0, 0.5 * e1}))));

  VectorXcd ev(2);
  ev << 1.0, 0.0;
  write("condition_state.json",
        io::to_json(io::ConditionRequest{io::Model(JointStateMatrix::product(pw, rho)), Projector::normalized(ev)}));
  write("condition_sdg.json", io::to_json(io::ConditionRequest{io::Model(near), Projector::normalized(ev)}));

  const auto gambles = single({HermitianMatrix::diagonal({1, -1}), HermitianMatrix::diagonal({-1, 2}), py - 0.4 * half});
  write("simulate.json", io::to_json(io::SimulateRequest{gambles, r}));
  std::cout << "fixtures written to " << dir << "\n";
}
