// Copyright 2026 The hsfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hsfuse/lidar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "hsfuse/error.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

// ---------------------------------------------------------------------------
// Point records

namespace {

bool parse_field(std::string_view f, double& out) {
  f = trim(f);
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
  return !f.empty() && ec == std::errc() && ptr == f.data() + f.size();
}

}  // namespace

std::vector<LidarPoint> parse_points(std::string_view text, std::string_view source) {
  std::vector<LidarPoint> points;
  std::size_t line_no = 0;
  bool seen_data = false;
  std::size_t start = 0;
  std::string_view fields[6];

  auto fail = [&](const std::string& why) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
  };

  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;

    std::size_t count = 0, pos = 0;
    while (count < 6) {
      const auto comma = line.find(',', pos);
      fields[count++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (comma == std::string_view::npos) {
        pos = line.size() + 1;
        break;
      }
      pos = comma + 1;
    }
    if (count != 6 || pos <= line.size()) fail("expected 6 comma-separated fields");

    double v[5];
    bool numeric = true;
    for (int i = 0; i < 5; ++i) numeric = numeric && parse_field(fields[i], v[i]);
    if (!numeric) {
      if (!seen_data && points.empty()) {  // column header
        seen_data = true;
        continue;
      }
      fail("malformed numeric field");
    }
    seen_data = true;

    const auto flag = trim(fields[5]);
    bool ground = false;
    if (flag == "1" || flag == "true") {
      ground = true;
    } else if (!(flag == "0" || flag == "false")) {
      fail("is_ground must be 0/1 or true/false");
    }
    for (int i = 0; i < 4; ++i)
      if (!std::isfinite(v[i])) fail("non-finite field");
    if (v[3] < 0.0) fail("intensity must be >= 0");
    if (v[4] < 1.0 || v[4] != std::floor(v[4]) || v[4] > 255.0) fail("return_number must be an integer >= 1");

    points.push_back({v[0], v[1], v[2], v[3], static_cast<int>(v[4]), ground});
  }
  return points;
}

std::vector<LidarPoint> load_points(const std::filesystem::path& path) {
  return parse_points(read_text_file(path), path.string());
}

void write_points(std::span<const LidarPoint> points, const std::filesystem::path& path) {
  std::string out = "# x,y,z,intensity,return_number,is_ground\n";
  out.reserve(points.size() * 48);
  for (const auto& p : points) {
    out += format_real(p.x);
    out += ',';
    out += format_real(p.y);
    out += ',';
    out += format_real(p.z);
    out += ',';
    out += format_real(p.intensity);
    out += ',';
    out += std::to_string(p.return_number);
    out += p.is_ground ? ",1\n" : ",0\n";
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Triangulation

namespace {

using real = long double;

struct Pt {
  double x, y;
};

real orient(const Pt& a, const Pt& b, const Pt& c) {
  return (static_cast<real>(b.x) - a.x) * (static_cast<real>(c.y) - a.y) -
         (static_cast<real>(b.y) - a.y) * (static_cast<real>(c.x) - a.x);
}

// Positive when d is strictly inside the circumcircle of CCW triangle abc.
real incircle(const Pt& a, const Pt& b, const Pt& c, const Pt& d) {
  const real adx = static_cast<real>(a.x) - d.x, ady = static_cast<real>(a.y) - d.y;
  const real bdx = static_cast<real>(b.x) - d.x, bdy = static_cast<real>(b.y) - d.y;
  const real cdx = static_cast<real>(c.x) - d.x, cdy = static_cast<real>(c.y) - d.y;
  const real alift = adx * adx + ady * ady;
  const real blift = bdx * bdx + bdy * bdy;
  const real clift = cdx * cdx + cdy * cdy;
  return adx * (bdy * clift - cdy * blift) - ady * (bdx * clift - cdx * blift) +
         alift * (bdx * cdy - bdy * cdx);
}

class BowyerWatson {
 public:
  explicit BowyerWatson(std::vector<Pt> sites) : pts_(std::move(sites)), n_(static_cast<int>(pts_.size())) {
    double minx = pts_[0].x, maxx = minx, miny = pts_[0].y, maxy = miny;
    for (const auto& p : pts_) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    const double span = std::max({maxx - minx, maxy - miny, 1e-12});
    const double cx = 0.5 * (minx + maxx), cy = 0.5 * (miny + maxy);
    const double m = 1000.0 * span;
    pts_.push_back({cx - 2.0 * m, cy - m});
    pts_.push_back({cx + 2.0 * m, cy - m});
    pts_.push_back({cx, cy + 2.0 * m});
    tris_.push_back({{n_, n_ + 1, n_ + 2}, {-1, -1, -1}, true});
    mark_.push_back(0);
    first_edge_.assign(pts_.size(), -1);
  }

  void insert_all() {
    for (int i = 0; i < n_; ++i) insert(i);
  }

  std::vector<std::array<std::uint32_t, 3>> real_triangles() const {
    std::vector<std::array<std::uint32_t, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_ || t.v[1] >= n_ || t.v[2] >= n_) continue;
      out.push_back({static_cast<std::uint32_t>(t.v[0]), static_cast<std::uint32_t>(t.v[1]),
                     static_cast<std::uint32_t>(t.v[2])});
    }
    return out;
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nbr;  // nbr[i] lies across the edge opposite v[i]
    bool alive;
  };

  struct Edge {
    int a, b, outer, inner;
  };

  bool contains(const Tri& t, const Pt& p) const {
    for (int i = 0; i < 3; ++i)
      if (orient(pts_[t.v[(i + 1) % 3]], pts_[t.v[(i + 2) % 3]], p) < 0) return false;
    return true;
  }

  int locate(const Pt& p) {
    int t = last_;
    const std::size_t limit = tris_.size() * 2 + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& tri = tris_[t];
      int next = -1;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        if (orient(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) < 0) {
          next = tri.nbr[i];
          break;
        }
      }
      if (next == -2) break;
      if (next < 0) {
        // No edge faces p: p is inside (or outside the super triangle).
        if (contains(tri, p)) return t;
        break;
      }
      t = next;
    }
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i)
      if (tris_[i].alive && contains(tris_[i], p)) return i;
    throw NumericError("point location failed during triangulation");
  }

  int allocate(const Tri& t) {
    if (!free_.empty()) {
      const int id = free_.back();
      free_.pop_back();
      tris_[id] = t;
      return id;
    }
    tris_.push_back(t);
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  void insert(int vi) {
    const Pt& p = pts_[vi];
    const int t0 = locate(p);
    ++epoch_;

    cavity_.clear();
    stack_.clear();
    stack_.push_back(t0);
    mark_[t0] = epoch_;
    // p on an edge of its containing triangle: the neighbor there must go too.
    for (int i = 0; i < 3; ++i) {
      const Tri& tri = tris_[t0];
      const int nb = tri.nbr[i];
      if (nb >= 0 && mark_[nb] != epoch_ &&
          orient(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) == 0) {
        mark_[nb] = epoch_;
        stack_.push_back(nb);
      }
    }
    while (!stack_.empty()) {
      const int t = stack_.back();
      stack_.pop_back();
      cavity_.push_back(t);
      for (int nb : tris_[t].nbr) {
        if (nb < 0 || mark_[nb] == epoch_) continue;
        const Tri& o = tris_[nb];
        if (incircle(pts_[o.v[0]], pts_[o.v[1]], pts_[o.v[2]], p) > 0) {
          mark_[nb] = epoch_;
          stack_.push_back(nb);
        }
      }
    }

    // Keep the cavity star-shaped from p despite round-off.
    for (bool changed = true; changed;) {
      changed = false;
      boundary_.clear();
      for (std::size_t k = 0; k < cavity_.size() && !changed; ++k) {
        const int t = cavity_[k];
        const Tri& tri = tris_[t];
        for (int i = 0; i < 3; ++i) {
          const int nb = tri.nbr[i];
          if (nb >= 0 && mark_[nb] == epoch_) continue;
          const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
          if (orient(pts_[a], pts_[b], p) <= 0 && t != t0) {
            mark_[t] = 0;
            cavity_.erase(cavity_.begin() + static_cast<std::ptrdiff_t>(k));
            changed = true;
            break;
          }
          boundary_.push_back({a, b, nb, t});
        }
      }
    }

    for (int t : cavity_) {
      tris_[t].alive = false;
      free_.push_back(t);
    }

    created_.clear();
    for (const auto& e : boundary_) {
      const int id = allocate({{e.a, e.b, vi}, {-1, -1, e.outer}, true});
      created_.push_back(id);
      first_edge_[e.a] = id;
      if (e.outer >= 0) {
        Tri& o = tris_[e.outer];
        for (int j = 0; j < 3; ++j) {
          if (o.v[j] != e.a && o.v[j] != e.b) {
            o.nbr[j] = id;
            break;
          }
        }
      }
    }
    for (int id : created_) {
      Tri& t = tris_[id];
      const int m = first_edge_[t.v[1]];
      if (m < 0) throw NumericError("triangulation cavity is not a simple polygon");
      t.nbr[0] = m;
      tris_[m].nbr[1] = id;
    }
    for (int id : created_) first_edge_[tris_[id].v[0]] = -1;
    last_ = created_.front();
  }

  std::vector<Pt> pts_;
  int n_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> mark_;
  std::vector<int> first_edge_;
  std::vector<int> cavity_, stack_, created_;
  std::vector<Edge> boundary_;
  int epoch_ = 0;
  int last_ = 0;
};

double hull_area(std::vector<Pt> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Pt> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && orient(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) area += hull[i].x * hull[i + 1].y - hull[i + 1].x * hull[i].y;
  return 0.5 * area;
}

double tri_area(const std::vector<Pt>& p, const std::array<std::uint32_t, 3>& t) {
  return 0.5 * static_cast<double>(orient(p[t[0]], p[t[1]], p[t[2]]));
}

using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;

// Fills concave notches along the triangulation boundary with ears. Only
// needed when the finite super triangle hid thin hull triangles.
void fill_hull_notches(const std::vector<Pt>& p, std::vector<std::array<std::uint32_t, 3>>& tris) {
  for (int guard = 0; guard < 1000000; ++guard) {
    std::map<EdgeKey, int> directed;
    for (const auto& t : tris)
      for (int i = 0; i < 3; ++i) directed[{t[i], t[(i + 1) % 3]}]++;
    std::map<std::uint32_t, std::uint32_t> next;
    for (const auto& [e, cnt] : directed) {
      if (directed.count({e.second, e.first})) continue;
      if (!next.emplace(e.first, e.second).second) {
        throw NumericError("triangulation boundary is not a simple loop");
      }
    }
    bool filled = false;
    for (const auto& [a, b] : next) {
      const auto c = next.at(b);
      if (c == a) continue;
      if (orient(p[a], p[b], p[c]) < 0) {
        tris.push_back({a, c, b});
        filled = true;
        break;
      }
    }
    if (!filled) return;
  }
  throw NumericError("hull completion did not terminate");
}

// Lawson flips until every interior edge is locally Delaunay.
void legalize(const std::vector<Pt>& p, std::vector<std::array<std::uint32_t, 3>>& tris) {
  for (std::size_t pass = 0; pass < 100 * tris.size() + 100; ++pass) {
    std::map<EdgeKey, std::pair<int, int>> owner;  // directed edge -> (tri, local index of edge start)
    for (int t = 0; t < static_cast<int>(tris.size()); ++t)
      for (int i = 0; i < 3; ++i) owner[{tris[t][i], tris[t][(i + 1) % 3]}] = {t, i};
    bool flipped = false;
    for (const auto& [e, where] : owner) {
      auto it = owner.find({e.second, e.first});
      if (it == owner.end() || e.first > e.second) continue;
      const auto [t1, i1] = where;
      const auto [t2, i2] = it->second;
      const std::uint32_t a = tris[t1][i1], b = tris[t1][(i1 + 1) % 3], r = tris[t1][(i1 + 2) % 3];
      const std::uint32_t s = tris[t2][(i2 + 2) % 3];
      if (incircle(p[a], p[b], p[r], p[s]) <= 0) continue;
      if (orient(p[r], p[a], p[s]) <= 0 || orient(p[s], p[b], p[r]) <= 0) continue;
      tris[t1] = {r, a, s};
      tris[t2] = {s, b, r};
      flipped = true;
      break;
    }
    if (!flipped) return;
  }
  throw NumericError("edge flipping did not converge");
}

}  // namespace

Tin build_tin(std::span<const Site> sites) {
  // Order by (x, y); the stable sort keeps input order within duplicates so
  // the last occurrence wins.
  std::vector<std::size_t> order(sites.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return sites[i].x < sites[j].x || (sites[i].x == sites[j].x && sites[i].y < sites[j].y);
  });
  Tin tin;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Site& s = sites[order[k]];
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.value)) {
      throw DataError("TIN sites must be finite");
    }
    if (!tin.vertices.empty() && tin.vertices.back().x == s.x && tin.vertices.back().y == s.y) {
      tin.vertices.back() = s;
    } else {
      tin.vertices.push_back(s);
    }
  }
  if (tin.vertices.size() < 3) throw DataError("TIN needs at least 3 distinct sites");

  // Work relative to the first site to keep predicates well conditioned.
  const double ox = tin.vertices.front().x, oy = tin.vertices.front().y;
  std::vector<Pt> local;
  local.reserve(tin.vertices.size());
  for (const auto& v : tin.vertices) local.push_back({v.x - ox, v.y - oy});

  bool collinear = true;
  for (std::size_t i = 2; i < local.size() && collinear; ++i) {
    collinear = orient(local[0], local[1], local[i]) == 0;
  }
  if (collinear) throw DataError("TIN sites are all collinear");

  BowyerWatson bw(local);
  bw.insert_all();
  tin.triangles = bw.real_triangles();

  double covered = 0.0;
  for (const auto& t : tin.triangles) covered += tri_area(local, t);
  const double hull = hull_area(local);
  if (std::abs(covered - hull) > 1e-9 * hull) {
    fill_hull_notches(local, tin.triangles);
    legalize(local, tin.triangles);
  }
  return tin;
}

RasterGrid rasterize_tin(const Tin& tin, std::size_t rows, std::size_t cols, const GeoAnchor& geo) {
  RasterGrid out(rows, cols, 1, RasterGrid::kDefaultNodata, geo);
  auto band = out.band(0);
  std::fill(band.begin(), band.end(), out.nodata());
  std::vector<char> done(band.size(), 0);

  const double ps = geo.pixel_size;
  for (const auto& t : tin.triangles) {
    const Site& a = tin.vertices[t[0]];
    const Site& b = tin.vertices[t[1]];
    const Site& c = tin.vertices[t[2]];
    const double minx = std::min({a.x, b.x, c.x}), maxx = std::max({a.x, b.x, c.x});
    const double miny = std::min({a.y, b.y, c.y}), maxy = std::max({a.y, b.y, c.y});

    // Column j has its center at origin_x + (j + 0.5) ps.
    const double c_lo = std::ceil((minx - geo.origin_x) / ps - 0.5 - 1e-9);
    const double c_hi = std::floor((maxx - geo.origin_x) / ps - 0.5 + 1e-9);
    const double r_lo = std::ceil((geo.origin_y - maxy) / ps - 0.5 - 1e-9);
    const double r_hi = std::floor((geo.origin_y - miny) / ps - 0.5 + 1e-9);
    if (c_hi < 0 || r_hi < 0 || c_lo >= static_cast<double>(cols) || r_lo >= static_cast<double>(rows)) continue;
    const auto c0 = static_cast<std::size_t>(std::max(0.0, c_lo));
    const auto c1 = static_cast<std::size_t>(std::min(static_cast<double>(cols) - 1, c_hi));
    const auto r0 = static_cast<std::size_t>(std::max(0.0, r_lo));
    const auto r1 = static_cast<std::size_t>(std::min(static_cast<double>(rows) - 1, r_hi));

    const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (!(det > 0.0)) continue;
    const double tol = -1e-12;
    for (std::size_t r = r0; r <= r1; ++r) {
      const double y = geo.center_y(r);
      for (std::size_t col = c0; col <= c1; ++col) {
        const std::size_t idx = r * cols + col;
        if (done[idx]) continue;
        const double x = geo.center_x(col);
        const double wa = ((b.x - x) * (c.y - y) - (b.y - y) * (c.x - x)) / det;
        const double wb = ((c.x - x) * (a.y - y) - (c.y - y) * (a.x - x)) / det;
        const double wc = 1.0 - wa - wb;
        if (wa < tol || wb < tol || wc < tol) continue;
        band[idx] = static_cast<float>(wa * a.value + wb * b.value + wc * c.value);
        done[idx] = 1;
      }
    }
  }
  return out;
}

Surfaces derive_surfaces(std::span<const LidarPoint> points, std::size_t rows, std::size_t cols,
                         const GeoAnchor& geo) {
  std::vector<Site> ground, first_z, first_i;
  for (const auto& p : points) {
    if (p.is_ground) ground.push_back({p.x, p.y, p.z});
    if (p.return_number == 1) {
      first_z.push_back({p.x, p.y, p.z});
      first_i.push_back({p.x, p.y, p.intensity});
    }
  }
  if (ground.size() < 3) throw DataError("need at least 3 ground points for the DEM");
  if (first_z.size() < 3) throw DataError("need at least 3 first-return points for the DSM");

  Surfaces s{rasterize_tin(build_tin(ground), rows, cols, geo),
             rasterize_tin(build_tin(first_z), rows, cols, geo), RasterGrid(rows, cols, 1, RasterGrid::kDefaultNodata, geo),
             rasterize_tin(build_tin(first_i), rows, cols, geo)};
  s.dem.band_names[0] = "dem";
  s.dsm.band_names[0] = "dsm";
  s.ndsm.band_names[0] = "ndsm";
  s.intensity.band_names[0] = "intensity";

  auto dem = s.dem.band(0);
  auto dsm = s.dsm.band(0);
  auto ndsm = s.ndsm.band(0);
  for (std::size_t i = 0; i < ndsm.size(); ++i) {
    if (s.dem.is_nodata(dem[i]) || s.dsm.is_nodata(dsm[i])) {
      ndsm[i] = s.ndsm.nodata();
    } else {
      ndsm[i] = std::max(dsm[i] - dem[i], 0.0f);
    }
  }
  return s;
}

}  // namespace hsf
