#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "mammo/errors.hpp"
#include "mammo/mias.hpp"
#include "mammo/pnm_io.hpp"
#include "support.hpp"

using namespace mammo;
using namespace mammo::mias;

TEST_CASE("parse_info examples") {
  const auto recs = parse_info(
      "# header comment\n"
      "mdb001 G CIRC B 535 425 197\n"
      "\n"
      "mdb003 D NORM\n"
      "mdb005 F CIRC B 477 133 30\n"
      "mdb005 F CIRC B 500 168 26\n"
      "mdb059 F CIRC B *NOTE 3*\n"
      "mdb144 F MISC M\n");
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].id == "mdb001");
  CHECK(recs[0].tissue == Tissue::Glandular);
  CHECK(recs[0].abnormality == Abnormality::Circ);
  CHECK(recs[0].severity == Severity::Benign);
  CHECK(recs[0].x == 535u);
  CHECK(recs[0].y == 425u);
  CHECK(recs[0].radius == 197u);
  CHECK(recs[0].abnormal());

  CHECK(recs[1].abnormality == Abnormality::Norm);
  CHECK_FALSE(recs[1].severity.has_value());
  CHECK_FALSE(recs[1].has_geometry());
  CHECK_FALSE(recs[1].abnormal());

  CHECK(recs[2].id == recs[3].id);
  CHECK_FALSE(recs[4].has_geometry());
  CHECK(recs[5].severity == Severity::Malignant);
  CHECK_FALSE(recs[5].has_geometry());
  CHECK(to_string(Abnormality::Spic) == "SPIC");
}

TEST_CASE("parse_info errors carry the line number") {
  auto line_of = [](const char* text) {
    try {
      parse_info(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("mdb001 G CIRC B 1 2 3\nmdbXXX G BOGUS\n") == 2);
  CHECK(line_of("\n\nmdb002 Q NORM\n") == 3);
  CHECK(line_of("mdb003 D NORM B\n") == 1);
  CHECK(line_of("mdb004 D CALC X\n") == 1);
  CHECK(line_of("mdb005 D CIRC B 1024 10 5\n") == 1);
  CHECK(line_of("mdb006 D\n") == 1);
}

TEST_CASE("every abnormality code maps to exactly one label") {
  for (const char* code : {"CALC", "CIRC", "SPIC", "MISC", "ARCH", "ASYM", "NORM"}) {
    const auto r = parse_info(std::string("m F ") + code + "\n");
    REQUIRE(r.size() == 1);
    CHECK(r[0].abnormal() == (std::string(code) != "NORM"));
    CHECK(to_string(r[0].abnormality) == code);
  }
}

TEST_CASE("ground-truth circles") {
  Record r;
  r.id = "m";
  r.abnormality = Abnormality::Circ;
  r.x = 10;
  r.y = 30;
  r.radius = 0;
  const auto dot = ground_truth_mask(r, 40, 40);
  CHECK(dot.count() == 1);
  CHECK(dot.at(10, 10));  // row = 40 - 30

  r.x = 200;
  r.y = 150;
  r.radius = 50;
  const auto big = ground_truth_mask(r, 400, 400);
  const double area = std::numbers::pi * 50.0 * 50.0;
  CHECK(std::abs(static_cast<double>(big.count()) - area) <= 0.02 * area);
  CHECK(big.at(250, 200));
  CHECK_FALSE(big.at(150, 200));

  // A lesion straddling the border is clipped, not dropped.
  r.x = 2;
  r.y = 98;
  r.radius = 10;
  const auto edge = ground_truth_mask(r, 100, 100);
  CHECK(edge.count() > 0);
  CHECK(edge.count() < std::numbers::pi * 100.0);

  Record other = r;
  other.x = 80;
  other.y = 20;
  other.radius = 5;
  const std::vector<Record> both{r, other};
  const auto uni = ground_truth_mask(both, 100, 100);
  CHECK(uni.count() == edge.count() + ground_truth_mask(other, 100, 100).count());

  Record norm;
  CHECK_THROWS_AS(ground_truth_mask(norm, 10, 10), ArgumentError);
  Record bare;
  bare.abnormality = Abnormality::Calc;
  CHECK_THROWS_AS(ground_truth_mask(bare, 10, 10), ArgumentError);
}

TEST_CASE("load_dataset") {
  const auto dir = testing::scratch_dir("mias_load");
  write_file(dir / "mdb001.pgm", write_pgm(testing::random_u8_image(40, 20, 1)));
  write_file(dir / "mdb002.pgm", write_pgm(testing::random_u8_image(40, 20, 2)));
  {
    std::ofstream(dir / "info.txt") << "mdb001 G CIRC B 10 10 3\nmdb001 G CIRC B 30 5 2\nmdb002 F NORM\n";
  }
  const auto res = load_dataset(dir, dir / "info.txt");
  REQUIRE(res.items.size() == 2);
  CHECK(res.items[0].label == Label::Abnormal);
  CHECK(res.items[0].records.size() == 2);
  CHECK(res.items[1].label == Label::Normal);
  CHECK(res.items[0].image == read_pgm_file(dir / "mdb001.pgm"));
  CHECK(res.warnings.size() == 2);

  LoadOptions small;
  small.max_side = 10;
  const auto down = load_dataset(dir, dir / "info.txt", small);
  CHECK(down.items[0].image.width() == 10);
  CHECK(down.items[0].image.height() == 5);

  {
    std::ofstream(dir / "info.txt", std::ios::app) << "mdb777 D NORM\n";
  }
  try {
    load_dataset(dir, dir / "info.txt");
    FAIL("missing image not reported");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("mdb777") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset(dir, dir / "absent.txt"), IoError);
}
