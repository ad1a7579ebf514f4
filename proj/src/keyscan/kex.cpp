#include "fpscan/keyscan/kex.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/rand.h>

#include <algorithm>

#include "fpscan/keyscan/ssh_wire.hpp"

namespace fpscan::keyscan {

namespace {

// RFC 3526 2048-bit MODP group (group 14), generator 2.
constexpr const char* kGroup14Prime =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct BnFree {
  void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct BnCtxFree {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct ParamBldFree {
  void operator()(OSSL_PARAM_BLD* p) const { OSSL_PARAM_BLD_free(p); }
};
struct ParamFree {
  void operator()(OSSL_PARAM* p) const { OSSL_PARAM_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using BnPtr = std::unique_ptr<BIGNUM, BnFree>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxFree>;
using ParamBldPtr = std::unique_ptr<OSSL_PARAM_BLD, ParamBldFree>;
using ParamPtr = std::unique_ptr<OSSL_PARAM, ParamFree>;

BnPtr bn_from(ByteView magnitude) {
  return BnPtr(BN_bin2bn(magnitude.data(), static_cast<int>(magnitude.size()), nullptr));
}

Bytes bn_bytes(const BIGNUM* bn) {
  Bytes out(static_cast<std::size_t>(BN_num_bytes(bn)));
  BN_bn2bin(bn, out.data());
  return out;
}

class Curve25519KeyPair final : public KexKeyPair {
 public:
  Curve25519KeyPair() {
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_X25519, nullptr));
    EVP_PKEY* raw = nullptr;
    if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 || EVP_PKEY_keygen(ctx.get(), &raw) != 1) {
      throw std::runtime_error("X25519 key generation failed");
    }
    key_.reset(raw);
  }

  KexMethod method() const override { return KexMethod::kCurve25519Sha256; }

  Bytes public_value() const override {
    Bytes out(32);
    std::size_t len = out.size();
    EVP_PKEY_get_raw_public_key(key_.get(), out.data(), &len);
    return out;
  }

  Bytes shared_secret(ByteView peer_public) const override {
    if (peer_public.size() != 32) throw ProtocolError("curve25519 public key must be 32 bytes");
    PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                             peer_public.size()));
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
    std::size_t len = 32;
    Bytes secret(len);
    if (!peer || !ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
        EVP_PKEY_derive(ctx.get(), secret.data(), &len) != 1 || len != 32) {
      throw ProtocolError("curve25519 key agreement failed");
    }
    if (std::ranges::all_of(secret, [](std::uint8_t b) { return b == 0; })) {
      throw ProtocolError("curve25519 shared secret is zero");
    }
    return secret;
  }

 private:
  PkeyPtr key_;
};

class DhGroup14KeyPair final : public KexKeyPair {
 public:
  DhGroup14KeyPair() : ctx_(BN_CTX_new()) {
    BIGNUM* p = nullptr;
    BN_hex2bn(&p, kGroup14Prime);
    p_.reset(p);
    g_.reset(BN_new());
    BN_set_word(g_.get(), 2);
    x_.reset(BN_new());
    e_.reset(BN_new());
    if (BN_priv_rand(x_.get(), 512, BN_RAND_TOP_ONE, BN_RAND_BOTTOM_ANY) != 1 ||
        BN_mod_exp(e_.get(), g_.get(), x_.get(), p_.get(), ctx_.get()) != 1) {
      throw std::runtime_error("DH group14 key generation failed");
    }
  }

  KexMethod method() const override { return KexMethod::kDhGroup14Sha256; }

  Bytes public_value() const override { return bn_bytes(e_.get()); }

  Bytes shared_secret(ByteView peer_public) const override {
    BnPtr f = bn_from(peer_public);
    BnPtr p_minus_1(BN_dup(p_.get()));
    BN_sub_word(p_minus_1.get(), 1);
    if (BN_cmp(f.get(), BN_value_one()) <= 0 || BN_cmp(f.get(), p_minus_1.get()) >= 0) {
      throw ProtocolError("DH public value out of range");
    }
    BnPtr k(BN_new());
    if (BN_mod_exp(k.get(), f.get(), x_.get(), p_.get(), ctx_.get()) != 1) {
      throw ProtocolError("DH key agreement failed");
    }
    return bn_bytes(k.get());
  }

 private:
  BnCtxPtr ctx_;
  BnPtr p_, g_, x_, e_;
};

PkeyPtr pkey_from_params(const char* type, OSSL_PARAM_BLD* bld) {
  ParamPtr params(OSSL_PARAM_BLD_to_param(bld));
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_from_name(nullptr, type, nullptr));
  EVP_PKEY* raw = nullptr;
  if (!params || !ctx || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
      EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params.get()) != 1) {
    return nullptr;
  }
  return PkeyPtr(raw);
}

bool digest_verify(EVP_PKEY* key, const EVP_MD* md, ByteView sig, ByteView data) {
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, md, nullptr, key) != 1) return false;
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), data.data(), data.size()) == 1;
}

bool verify_eddsa(int type, std::size_t key_len, ByteView pub, ByteView sig, ByteView data) {
  if (pub.size() != key_len) return false;
  PkeyPtr key(EVP_PKEY_new_raw_public_key(type, nullptr, pub.data(), pub.size()));
  return key && digest_verify(key.get(), nullptr, sig, data);
}

bool verify_ecdsa(std::string_view key_type, SshReader& key, ByteView sig, ByteView data) {
  const char* group = nullptr;
  const EVP_MD* md = nullptr;
  std::string_view curve;
  if (key_type == "ecdsa-sha2-nistp256") {
    group = "P-256", md = EVP_sha256(), curve = "nistp256";
  } else if (key_type == "ecdsa-sha2-nistp384") {
    group = "P-384", md = EVP_sha384(), curve = "nistp384";
  } else if (key_type == "ecdsa-sha2-nistp521") {
    group = "P-521", md = EVP_sha512(), curve = "nistp521";
  } else {
    return false;
  }
  if (key.text() != curve) return false;
  const ByteView point = key.string();

  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME, group, 0);
  OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, point.data(), point.size());
  PkeyPtr pkey = pkey_from_params("EC", bld.get());
  if (!pkey) return false;

  SshReader rs(sig);
  const ByteView r = rs.mpint();
  const ByteView s = rs.mpint();
  return digest_verify(pkey.get(), md, der_signature(r, s), data);
}

bool verify_rsa(SshReader& key, std::string_view sig_algo, ByteView sig, ByteView data) {
  const EVP_MD* md = nullptr;
  if (sig_algo == "rsa-sha2-512") {
    md = EVP_sha512();
  } else if (sig_algo == "rsa-sha2-256") {
    md = EVP_sha256();
  } else if (sig_algo == "ssh-rsa") {
    md = EVP_sha1();
  } else {
    return false;
  }
  BnPtr e = bn_from(key.mpint());
  BnPtr n = bn_from(key.mpint());
  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get());
  PkeyPtr pkey = pkey_from_params("RSA", bld.get());
  if (!pkey) return false;

  // Some servers strip leading zero bytes from the signature.
  const auto modulus_len = static_cast<std::size_t>(BN_num_bytes(n.get()));
  if (sig.size() > modulus_len) return false;
  Bytes padded(modulus_len - sig.size(), 0);
  padded.insert(padded.end(), sig.begin(), sig.end());
  return digest_verify(pkey.get(), md, padded, data);
}

bool verify_dss(SshReader& key, ByteView sig, ByteView data) {
  BnPtr p = bn_from(key.mpint());
  BnPtr q = bn_from(key.mpint());
  BnPtr g = bn_from(key.mpint());
  BnPtr y = bn_from(key.mpint());
  if (sig.size() != 40) return false;
  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_FFC_P, p.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_FFC_Q, q.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_FFC_G, g.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, y.get());
  PkeyPtr pkey = pkey_from_params("DSA", bld.get());
  if (!pkey) return false;
  return digest_verify(pkey.get(), EVP_sha1(), der_signature(sig.first(20), sig.subspan(20)),
                       data);
}

void der_length(Bytes& out, std::size_t len) {
  if (len < 0x80) {
    out.push_back(static_cast<std::uint8_t>(len));
  } else if (len <= 0xff) {
    out.push_back(0x81);
    out.push_back(static_cast<std::uint8_t>(len));
  } else {
    out.push_back(0x82);
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
  }
}

Bytes der_integer(ByteView magnitude) {
  std::size_t skip = 0;
  while (skip < magnitude.size() && magnitude[skip] == 0) ++skip;
  Bytes content;
  if (skip == magnitude.size() || (magnitude[skip] & 0x80) != 0) content.push_back(0);
  content.insert(content.end(), magnitude.begin() + static_cast<std::ptrdiff_t>(skip),
                 magnitude.end());
  Bytes out{0x02};
  der_length(out, content.size());
  out.insert(out.end(), content.begin(), content.end());
  return out;
}

}  // namespace

std::optional<KexMethod> kex_method_from_name(std::string_view name) {
  if (name == "curve25519-sha256" || name == "curve25519-sha256@libssh.org") {
    return KexMethod::kCurve25519Sha256;
  }
  if (name == "diffie-hellman-group14-sha256") return KexMethod::kDhGroup14Sha256;
  return std::nullopt;
}

const std::vector<std::string>& supported_kex_names() {
  static const std::vector<std::string> names = {
      "curve25519-sha256", "curve25519-sha256@libssh.org", "diffie-hellman-group14-sha256"};
  return names;
}

Bytes KexInit::encode() const {
  auto c = cookie;
  if (std::ranges::all_of(c, [](std::uint8_t b) { return b == 0; })) {
    RAND_bytes(c.data(), static_cast<int>(c.size()));
  }
  SshWriter w;
  w.byte(msg::kKexInit).raw(c);
  w.name_list(kex_algorithms).name_list(server_host_key_algorithms);
  w.name_list(encryption_c2s).name_list(encryption_s2c);
  w.name_list(mac_c2s).name_list(mac_s2c);
  w.name_list(compression_c2s).name_list(compression_s2c);
  w.name_list(languages_c2s).name_list(languages_s2c);
  w.boolean(first_kex_packet_follows).u32(0);
  return std::move(w).bytes();
}

KexInit KexInit::decode(ByteView payload) {
  SshReader r(payload);
  if (r.byte() != msg::kKexInit) throw ProtocolError("expected KEXINIT");
  KexInit k;
  for (auto& b : k.cookie) b = r.byte();
  k.kex_algorithms = r.name_list();
  k.server_host_key_algorithms = r.name_list();
  k.encryption_c2s = r.name_list();
  k.encryption_s2c = r.name_list();
  k.mac_c2s = r.name_list();
  k.mac_s2c = r.name_list();
  k.compression_c2s = r.name_list();
  k.compression_s2c = r.name_list();
  k.languages_c2s = r.name_list();
  k.languages_s2c = r.name_list();
  k.first_kex_packet_follows = r.boolean();
  r.u32();
  return k;
}

std::optional<std::string> negotiate(const std::vector<std::string>& client,
                                     const std::vector<std::string>& server) {
  for (const auto& name : client) {
    if (std::ranges::find(server, name) != server.end()) return name;
  }
  return std::nullopt;
}

std::vector<std::string> host_key_algorithms_for(std::string_view key_type) {
  if (key_type == "ssh-rsa") return {"rsa-sha2-512", "rsa-sha2-256", "ssh-rsa"};
  return {std::string(key_type)};
}

std::string key_type_for_signature_algorithm(std::string_view algorithm) {
  if (algorithm == "rsa-sha2-256" || algorithm == "rsa-sha2-512") return "ssh-rsa";
  return std::string(algorithm);
}

std::unique_ptr<KexKeyPair> KexKeyPair::generate(KexMethod method) {
  switch (method) {
    case KexMethod::kCurve25519Sha256:
      return std::make_unique<Curve25519KeyPair>();
    case KexMethod::kDhGroup14Sha256:
      return std::make_unique<DhGroup14KeyPair>();
  }
  throw std::invalid_argument("unknown key exchange method");
}

Bytes exchange_hash(KexMethod method, std::string_view client_version,
                    std::string_view server_version, ByteView client_kexinit,
                    ByteView server_kexinit, ByteView host_key_blob, ByteView client_public,
                    ByteView server_public, ByteView shared_secret) {
  SshWriter w;
  w.string(client_version).string(server_version);
  w.string(client_kexinit).string(server_kexinit);
  w.string(host_key_blob);
  if (method == KexMethod::kCurve25519Sha256) {
    w.string(client_public).string(server_public);
  } else {
    w.mpint(client_public).mpint(server_public);
  }
  w.mpint(shared_secret);

  Bytes out(32);
  unsigned int len = 0;
  EVP_Digest(w.bytes().data(), w.bytes().size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

bool verify_host_key_signature(ByteView host_key_blob, ByteView signature_blob,
                               ByteView exchange_hash, std::string_view negotiated_algorithm) {
  try {
    SshReader key(host_key_blob);
    const std::string key_type = key.text();
    SshReader sig_reader(signature_blob);
    const std::string sig_algo = sig_reader.text();
    const ByteView sig = sig_reader.string();

    if (sig_algo != negotiated_algorithm) return false;
    if (key_type_for_signature_algorithm(sig_algo) != key_type) return false;

    if (key_type == "ssh-ed25519") {
      return verify_eddsa(EVP_PKEY_ED25519, 32, key.string(), sig, exchange_hash);
    }
    if (key_type == "ssh-ed448") {
      return verify_eddsa(EVP_PKEY_ED448, 57, key.string(), sig, exchange_hash);
    }
    if (key_type.starts_with("ecdsa-sha2-")) return verify_ecdsa(key_type, key, sig, exchange_hash);
    if (key_type == "ssh-rsa") return verify_rsa(key, sig_algo, sig, exchange_hash);
    if (key_type == "ssh-dss") return verify_dss(key, sig, exchange_hash);
    return false;
  } catch (const ProtocolError&) {
    return false;
  }
}

Bytes der_signature(ByteView r, ByteView s) {
  const Bytes ri = der_integer(r);
  const Bytes si = der_integer(s);
  Bytes out{0x30};
  der_length(out, ri.size() + si.size());
  out.insert(out.end(), ri.begin(), ri.end());
  out.insert(out.end(), si.begin(), si.end());
  return out;
}

}  // namespace fpscan::keyscan
