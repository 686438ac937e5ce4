"""Entry point for the BlindSignedID CLI when run as a module"""

import sys

# PyInstaller 환경에서 모듈 경로 설정
if getattr(sys, 'frozen', False) and hasattr(sys, '_MEIPASS'):
    sys.path.insert(0, sys._MEIPASS)

try:
    from bsid_cli.cli import cli
except ImportError:
    # 개발 환경에서는 상대 import 사용
    from .cli import cli

if __name__ == '__main__':
    cli(prog_name='bsid')
