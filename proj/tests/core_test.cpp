#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "camgrid/core/error.hpp"
#include "camgrid/core/geo.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/core/serialize.hpp"
#include "camgrid/core/url.hpp"
#include "camgrid/core/validate.hpp"

using namespace camgrid;

namespace {

// Vincenty's inverse solution on the WGS-84 ellipsoid. Independent of the
// spherical haversine under test; used only as a reference distance.
double vincenty_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double a = 6378137.0;
    constexpr double f = 1 / 298.257223563;
    constexpr double b = (1 - f) * a;
    constexpr double rad = std::numbers::pi / 180.0;
    const double L = (lon2 - lon1) * rad;
    const double U1 = std::atan((1 - f) * std::tan(lat1 * rad));
    const double U2 = std::atan((1 - f) * std::tan(lat2 * rad));
    const double sinU1 = std::sin(U1), cosU1 = std::cos(U1), sinU2 = std::sin(U2), cosU2 = std::cos(U2);
    double lambda = L, prev = 0, sinSigma = 0, cosSigma = 0, sigma = 0, cosSqAlpha = 0, cos2SigmaM = 0;
    for (int i = 0; i < 200; ++i) {
        const double sinLambda = std::sin(lambda), cosLambda = std::cos(lambda);
        sinSigma = std::sqrt(std::pow(cosU2 * sinLambda, 2) + std::pow(cosU1 * sinU2 - sinU1 * cosU2 * cosLambda, 2));
        cosSigma = sinU1 * sinU2 + cosU1 * cosU2 * cosLambda;
        sigma = std::atan2(sinSigma, cosSigma);
        const double sinAlpha = cosU1 * cosU2 * sinLambda / sinSigma;
        cosSqAlpha = 1 - sinAlpha * sinAlpha;
        cos2SigmaM = cosSigma - 2 * sinU1 * sinU2 / cosSqAlpha;
        const double C = f / 16 * cosSqAlpha * (4 + f * (4 - 3 * cosSqAlpha));
        prev = lambda;
        lambda = L + (1 - C) * f * sinAlpha *
                         (sigma + C * sinSigma * (cos2SigmaM + C * cosSigma * (-1 + 2 * cos2SigmaM * cos2SigmaM)));
        if (std::abs(lambda - prev) < 1e-12) break;
    }
    const double uSq = cosSqAlpha * (a * a - b * b) / (b * b);
    const double A = 1 + uSq / 16384 * (4096 + uSq * (-768 + uSq * (320 - 175 * uSq)));
    const double B = uSq / 1024 * (256 + uSq * (-128 + uSq * (74 - 47 * uSq)));
    const double dSigma =
        B * sinSigma *
        (cos2SigmaM + B / 4 *
                          (cosSigma * (-1 + 2 * cos2SigmaM * cos2SigmaM) -
                           B / 6 * cos2SigmaM * (-3 + 4 * sinSigma * sinSigma) * (-3 + 4 * cos2SigmaM * cos2SigmaM)));
    return b * A * (sigma - dSigma) / 1000.0;
}

CameraRecord sample_record() {
    CameraRecord r;
    r.endpoint.url = "http://192.168.1.20/axis-cgi/jpg/image.cgi";
    r.endpoint.mode = RetrievalMode::snapshot_poll;
    r.endpoint.declared_format = MediaFormat::jpeg;
    r.id = camera_id_for(r.endpoint.url, r.endpoint.mode);
    r.location.point = GeoPoint{40.4237, -86.9212};
    r.location.provenance = LocationProvenance::owner_provided;
    r.location.country = "USA";
    r.location.state = "Indiana";
    r.location.city = "West Lafayette";
    r.quality.width = 640;
    r.quality.height = 480;
    r.quality.estimated_refresh_rate = 0.2;
    r.reliability.uptime_fraction = 0.97;
    r.reliability.last_seen = parse_timestamp("2026-01-02T03:04:05.678Z").value();
    r.reliability.observation_window = 86400;
    r.tags = {"outdoor", "campus"};
    return r;
}

std::vector<std::string> codes(const std::vector<Violation>& v) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.code);
    return out;
}

}  // namespace

TEST_CASE("haversine reference distances") {
    CHECK(haversine_km({0, 0}, {0, 0}) == 0.0);
    // Half the circumference of the mean sphere.
    CHECK(haversine_km({0, 0}, {0, 180}) == doctest::Approx(std::numbers::pi * kEarthRadiusKm).epsilon(1e-12));
    CHECK(haversine_km({0, 0}, {0, 180}) == doctest::Approx(20015.0).epsilon(0.001));

    const double paris_london = haversine_km({48.8566, 2.3522}, {51.5074, -0.1278});
    const double reference = vincenty_km(48.8566, 2.3522, 51.5074, -0.1278);
    CHECK(reference == doctest::Approx(344.0).epsilon(0.01));
    CHECK(paris_london == doctest::Approx(reference).epsilon(0.01));
}

TEST_CASE("haversine is symmetric and obeys the triangle inequality") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
        const double ab = haversine_km(a, b), ba = haversine_km(b, a);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) <= 1e-9 * std::max(1.0, ab));
        const double ac = haversine_km(a, c), cb = haversine_km(c, b);
        CHECK(ab <= (ac + cb) * (1 + 1e-9) + 1e-9);
        CHECK((haversine_km(a, a) == 0.0));
    }
}

TEST_CASE("validate_camera_record") {
    auto rec = sample_record();
    const auto now = parse_timestamp("2026-06-01T00:00:00.000Z").value();
    CHECK(validate_camera_record(rec, now).empty());

    SUBCASE("latitude out of range") {
        rec.location.point->latitude = 95;
        CHECK(codes(validate_camera_record(rec, now)) == std::vector<std::string>{"lat_out_of_range"});
    }
    SUBCASE("mjpeg mode with a jpeg declaration") {
        rec.endpoint.mode = RetrievalMode::mjpeg_stream;
        rec.endpoint.declared_format = MediaFormat::jpeg;
        CHECK(codes(validate_camera_record(rec, now)) == std::vector<std::string>{"format_mode_mismatch"});
        rec.endpoint.declared_format = MediaFormat::mjpeg;
        CHECK(validate_camera_record(rec, now).empty());
        rec.endpoint.declared_format.reset();
        CHECK(validate_camera_record(rec, now).empty());
    }
    SUBCASE("every rule reports its own code") {
        rec.id.clear();
        rec.endpoint.url = "ftp://x/y";
        rec.location.point.reset();
        rec.quality.height.reset();
        rec.quality.estimated_refresh_rate = 0.0;
        rec.reliability.uptime_fraction = 1.5;
        rec.reliability.last_seen = now + std::chrono::milliseconds(1);
        rec.reliability.observation_window = -1;
        CHECK(codes(validate_camera_record(rec, now)) ==
              std::vector<std::string>{"empty_id", "invalid_url", "missing_point", "dims_incomplete",
                                       "non_positive_refresh_rate", "uptime_out_of_range", "last_seen_in_future",
                                       "negative_observation_window"});
    }
    SUBCASE("unknown provenance may omit the point") {
        rec.location.point.reset();
        rec.location.provenance = LocationProvenance::unknown;
        CHECK(validate_camera_record(rec, now).empty());
    }
    SUBCASE("non-finite coordinates") {
        rec.location.point->longitude = std::nan("");
        CHECK(codes(validate_camera_record(rec, now)) == std::vector<std::string>{"non_finite_coordinate"});
    }
}

TEST_CASE("valid records round-trip through canonical JSON") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180), unit(0, 1);
    const auto now = now_utc();
    for (int i = 0; i < 300; ++i) {
        CameraRecord r;
        r.endpoint.url = "http://10.0." + std::to_string(i % 256) + "." + std::to_string(i / 7) + ":8080/snap?i=" +
                         std::to_string(i);
        r.endpoint.mode = i % 2 ? RetrievalMode::mjpeg_stream : RetrievalMode::snapshot_poll;
        if (i % 3 == 0) r.endpoint.declared_format = i % 2 ? MediaFormat::mjpeg : MediaFormat::png;
        r.id = camera_id_for(r.endpoint.url, r.endpoint.mode);
        r.kind = i % 5 ? CameraKind::ip_camera : CameraKind::non_ip_camera;
        if (i % 4) {
            r.location.point = GeoPoint{lat(rng), lon(rng)};
            r.location.provenance = static_cast<LocationProvenance>(i % 3);
        }
        if (i % 2) r.location.city = "City " + std::to_string(i);
        if (i % 6 == 1) {
            r.quality.width = 1 + i;
            r.quality.height = 2 + i;
        }
        if (i % 5 == 2) r.quality.estimated_refresh_rate = unit(rng) + 1e-6;
        r.reliability.uptime_fraction = unit(rng);
        r.reliability.last_seen = now - std::chrono::milliseconds(i * 1000);
        r.reliability.observation_window = unit(rng) * 1e5;
        if (i % 3) r.tags = {"tag" + std::to_string(i % 4), "outdoor"};
        REQUIRE(validate_camera_record(r, now).empty());

        const auto text = canonical_json(r);
        const auto back = parse_camera_record(text);
        CHECK(back == r);
        CHECK(canonical_json(back) == text);
    }
}

TEST_CASE("strict parsing names the offending field") {
    auto j = nlohmann::json(sample_record());
    j["endpoint"]["mode"] = "rtsp";
    try {
        (void)j.get<CameraRecord>();
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(e.details()["field"] == "mode");
    }
    j = nlohmann::json(sample_record());
    j.erase("reliability");
    CHECK_THROWS_AS((void)j.get<CameraRecord>(), Error);
    CHECK_THROWS_AS(parse_camera_record("{not json"), Error);
}

TEST_CASE("camera ids are content hashes of url and mode") {
    const auto a = camera_id_for("http://h/x", RetrievalMode::snapshot_poll);
    CHECK(a == camera_id_for("http://h/x", RetrievalMode::snapshot_poll));
    CHECK(a != camera_id_for("http://h/x", RetrievalMode::mjpeg_stream));
    CHECK(a != camera_id_for("http://h/y", RetrievalMode::snapshot_poll));
    CHECK(a.size() == 16);
}

TEST_CASE("timestamps") {
    const auto t = parse_timestamp("2024-02-29T23:59:59.5Z");
    REQUIRE(t);
    CHECK(format_timestamp(*t) == "2024-02-29T23:59:59.500Z");
    CHECK(parse_timestamp("1700000000123") == from_millis(1700000000123));
    CHECK_FALSE(parse_timestamp("2024-02-29 23:59"));
    CHECK_FALSE(parse_timestamp("2024-13-01T00:00:00Z"));
    CHECK(format_timestamp(from_millis(0)) == "1970-01-01T00:00:00.000Z");
}

TEST_CASE("url parsing") {
    auto u = parse_url("http://127.0.0.1:8080/a/b?c=d#frag");
    REQUIRE(u);
    CHECK(u->host == "127.0.0.1");
    CHECK(u->port == 8080);
    CHECK(u->target == "/a/b?c=d");
    CHECK(parse_url("HTTP://example.com")->target == "/");
    CHECK_FALSE(parse_url("/relative"));
    CHECK_FALSE(parse_url("rtsp://cam/stream"));
    CHECK_FALSE(parse_url("http://host:99999/"));
    auto r = resolve_reference(*u, "other.jpg");
    CHECK(r->target == "/a/other.jpg");
    CHECK(resolve_reference(*u, "/root")->target == "/root");
}

TEST_CASE("base64 round trip") {
    std::vector<std::uint8_t> data;
    for (int n = 0; n < 40; ++n) {
        const auto enc = base64_encode(data);
        const auto dec = base64_decode(enc);
        CHECK(std::vector<std::uint8_t>(dec.begin(), dec.end()) == data);
        data.push_back(static_cast<std::uint8_t>(n * 37));
    }
}
