import json
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# 仅管理命令使用，没有对外的 Web 服务
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'change-me-to-a-secure-key')

DEBUG = os.environ.get('DJANGO_DEBUG', 'false').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'miver',
]

# 求解器不使用数据库
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_bool(name: str, default: str) -> bool:
    return os.environ.get(name, default).lower() in ('true', '1', 'yes')


# 日志配置
MIVER_LOG_LEVEL = os.environ.get('MIVER_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'console': {
            'format': '%(asctime)s %(levelname)s [%(name)s] %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'console',
        },
    },
    'loggers': {
        'miver': {
            'handlers': ['console'],
            'level': MIVER_LOG_LEVEL,
            'propagate': False,
        },
    },
}

# 求解器默认参数
# 支持环境变量：
#   MIVER_POPULATION (默认: 100)       每步生成的样本数 N
#   MIVER_MAX_STEPS (默认: 5000)       自适应步数上限 M
#   MIVER_WORKERS (默认: 1)            并行评估线程数 N_P
#   MIVER_CHUNK_SIZE (默认: 8)         动态调度的工作单元大小
#   MIVER_SCHEDULE (默认: dynamic)     dynamic / static
MIVER_POPULATION = int(os.environ.get('MIVER_POPULATION', 100))
MIVER_MAX_STEPS = int(os.environ.get('MIVER_MAX_STEPS', 5000))
MIVER_WORKERS = int(os.environ.get('MIVER_WORKERS', 1))
MIVER_CHUNK_SIZE = int(os.environ.get('MIVER_CHUNK_SIZE', 8))
MIVER_SCHEDULE = os.environ.get('MIVER_SCHEDULE', 'dynamic').lower()
MIVER_TRACE_EVERY = int(os.environ.get('MIVER_TRACE_EVERY', 10))
MIVER_FEASIBILITY_RETRY_STEPS = int(os.environ.get('MIVER_FEASIBILITY_RETRY_STEPS', 200))

# 概率向量自适应与回滚
MIVER_ADAPT_STRATEGY = os.environ.get('MIVER_ADAPT_STRATEGY', 'multiplicative').lower()
MIVER_ADAPT_D = float(os.environ.get('MIVER_ADAPT_D', 1.5))
MIVER_ADAPT_W = float(os.environ.get('MIVER_ADAPT_W', 0.02))
MIVER_ADAPT_DELTA_F = float(os.environ.get('MIVER_ADAPT_DELTA_F', 0.0))
MIVER_ADAPT_WINDOW = int(os.environ.get('MIVER_ADAPT_WINDOW', 50))
MIVER_ROLLBACK = os.environ.get('MIVER_ROLLBACK', 'triggered').lower()
MIVER_ADAPTIVE_P0 = _env_bool('MIVER_ADAPTIVE_P0', 'false')

# 多节点多起点搜索
MIVER_CLUSTER_C_MAX = int(os.environ.get('MIVER_CLUSTER_C_MAX', 500))
MIVER_CLUSTER_QUIET_PERIOD = float(os.environ.get('MIVER_CLUSTER_QUIET_PERIOD', 30))
MIVER_CLUSTER_COMPRESS = _env_bool('MIVER_CLUSTER_COMPRESS', 'false')
MIVER_CLUSTER_STEP_MODE = os.environ.get('MIVER_CLUSTER_STEP_MODE', 'single')
MIVER_CLUSTER_CONNECT_TIMEOUT = float(os.environ.get('MIVER_CLUSTER_CONNECT_TIMEOUT', 30))
MIVER_CLUSTER_FAILURE_WINDOW = float(os.environ.get('MIVER_CLUSTER_FAILURE_WINDOW', 60))

# 节点列表，可以是 JSON 数组，也可以是逗号分隔的 host:port
MIVER_CLUSTER_PEERS = []
_raw_peers = os.environ.get('MIVER_CLUSTER_PEERS')
if _raw_peers:
    try:
        parsed = json.loads(_raw_peers)
        if isinstance(parsed, list):
            MIVER_CLUSTER_PEERS = [str(item) for item in parsed]
    except json.JSONDecodeError:
        MIVER_CLUSTER_PEERS = [p.strip() for p in _raw_peers.split(',') if p.strip()]

# 基准测试
MIVER_BENCH_CENSOR_FACTOR = float(os.environ.get('MIVER_BENCH_CENSOR_FACTOR', 100))
